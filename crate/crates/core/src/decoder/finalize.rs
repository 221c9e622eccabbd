use super::beam::Hypothesis;
use crate::error::{Error, Result};
use crate::text::{Vocabulary, CONTINUATION_MARKER, EOS, NO_SUFFIX};

/// Joins sub-stem fragments and attaches each word's suffix.
///
/// A suffix other than `N` on a continuation fragment is rejected.
pub fn finalize_tokens<S: AsRef<str>, T: AsRef<str>>(substems: &[S], suffixes: &[T]) -> Result<Vec<String>> {
    if substems.len() != suffixes.len() {
        return Err(Error::LengthMismatch(format!(
            "{} stems but {} suffixes",
            substems.len(),
            suffixes.len()
        )));
    }
    let mut words = Vec::new();
    let mut cur = String::new();
    for (stem, suffix) in substems.iter().zip(suffixes) {
        let (stem, suffix) = (stem.as_ref(), suffix.as_ref());
        match stem.strip_suffix(CONTINUATION_MARKER) {
            Some(head) => {
                if suffix != NO_SUFFIX {
                    return Err(Error::MisalignedSuffix {
                        fragment: stem.to_string(),
                        suffix: suffix.to_string(),
                    });
                }
                cur.push_str(head);
            }
            None => {
                cur.push_str(stem);
                if suffix != NO_SUFFIX {
                    cur.push_str(suffix);
                }
                words.push(std::mem::take(&mut cur));
            }
        }
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    Ok(words)
}

/// Surface words of a hypothesis; a trailing `</s>` is dropped.
pub fn finalize(hyp: &Hypothesis, stems: &Vocabulary, suffixes: &Vocabulary) -> Result<Vec<String>> {
    let mut n = hyp.len();
    if hyp.substems().last() == Some(&EOS) {
        n -= 1;
    }
    let s = stems.decode(&hyp.substems()[..n]);
    let f = suffixes.decode(&hyp.suffixes()[..n]);
    finalize_tokens(&s, &f)
}
