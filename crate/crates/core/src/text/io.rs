//! Line-oriented corpus files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{file_error, Error, Result};

pub fn read_lines(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(file_error(path))?);
    reader.lines().map(|l| l.map_err(file_error(path))).collect()
}

pub fn read_tokenized(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    Ok(read_lines(path)?
        .iter()
        .map(|l| l.split_whitespace().map(String::from).collect())
        .collect())
}

/// Reads two files that must have the same number of lines.
pub fn read_parallel(a: impl AsRef<Path>, b: impl AsRef<Path>) -> Result<Vec<(Vec<String>, Vec<String>)>> {
    let (pa, pb) = (a.as_ref(), b.as_ref());
    let left = read_tokenized(pa)?;
    let right = read_tokenized(pb)?;
    if left.len() != right.len() {
        return Err(Error::LengthMismatch(format!(
            "{} has {} lines but {} has {}",
            pa.display(),
            left.len(),
            pb.display(),
            right.len()
        )));
    }
    Ok(left.into_iter().zip(right).collect())
}

pub fn write_lines<I, S>(path: impl AsRef<Path>, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for l in lines {
            w.write_all(l.as_ref().as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.flush()
    };
    write().map_err(file_error(path))
}

pub fn write_tokenized<S: AsRef<str>>(path: impl AsRef<Path>, sents: &[Vec<S>]) -> Result<()> {
    write_lines(
        path,
        sents.iter().map(|s| {
            s.iter()
                .map(|t| t.as_ref())
                .collect::<Vec<_>>()
                .join(" ")
        }),
    )
}
