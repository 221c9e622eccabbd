use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

#[derive(Parser, Debug)]
#[command(name = "morphseq", version, about = "Factored stem/suffix neural translation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lowercase, generalize entities and length-filter a parallel corpus.
    Preprocess(PreprocessArgs),
    /// Replace every word by its stem.
    Stem(StemArgs),
    /// Learn BPE merges over a stem file.
    BpeLearn(BpeLearnArgs),
    /// Split target words into (sub-)stem and suffix sequences.
    Factor(FactorArgs),
    /// Build a frequency-ranked vocabulary.
    Vocab(VocabArgs),
    /// Drop sentence pairs that IBM Model 1 scores as poorly aligned.
    Ibm1Filter(Ibm1FilterArgs),
    /// Train a model on a factored corpus.
    Train(TrainArgs),
    /// Train with simulated workers and periodic parameter averaging.
    TrainDistributed(TrainArgs),
    /// Decode source sentences with beam search.
    Translate(TranslateArgs),
    /// Score hypotheses against references.
    Eval(EvalArgs),
    /// Generate a synthetic parallel corpus with a held-out split.
    Synth(SynthArgs),
    /// Compare analytic and finite-difference gradients on a tiny model.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    #[arg(long)]
    out_src: PathBuf,
    #[arg(long)]
    out_tgt: PathBuf,
    /// Entity table, one "placeholder<TAB>regex" per line.
    #[arg(long)]
    entities: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    min_len: usize,
    #[arg(long, default_value_t = 30)]
    max_len: usize,
}

#[derive(Args, Debug)]
struct RulesArg {
    /// Stemmer rules, one "suffix<TAB>min_stem_len" per line. Defaults to the built-in Russian table.
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StemArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    rules: RulesArg,
}

#[derive(Args, Debug)]
struct BpeLearnArgs {
    /// Whitespace-tokenized stems.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    merges: usize,
}

#[derive(Args, Debug)]
struct FactorArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_stems: PathBuf,
    #[arg(long)]
    out_suffixes: PathBuf,
    /// BPE merges to apply to stems, moving suffixes to final fragments.
    #[arg(long)]
    bpe: Option<PathBuf>,
    #[command(flatten)]
    rules: RulesArg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kind {
    Plain,
    Suffix,
}

#[derive(Args, Debug)]
struct VocabArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 30_000)]
    size: usize,
    #[arg(long, value_enum, default_value_t = Kind::Plain)]
    kind: Kind,
}

#[derive(Args, Debug)]
struct Ibm1FilterArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    #[arg(long)]
    out_src: PathBuf,
    #[arg(long)]
    out_tgt: PathBuf,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    #[arg(long, default_value_t = morphseq::text::DEFAULT_IBM1_THRESHOLD, allow_negative_numbers = true)]
    threshold: f64,
    /// Also write the score of every input pair here.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    stems: PathBuf,
    #[arg(long)]
    suffixes: PathBuf,
    /// Output directory for vocabularies, checkpoints, loss curve and manifest.
    #[arg(long)]
    out: PathBuf,
    /// "key = value" training configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// BPE merges the stems were segmented with, copied into the model directory.
    #[arg(long)]
    bpe: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    sync_every: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Skip per-epoch checkpoints.
    #[arg(long)]
    no_epoch_checkpoints: bool,
}

#[derive(Args, Debug)]
struct TranslateArgs {
    /// Directory written by train.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 4)]
    beam: usize,
    /// Emit the k best outputs per line as "index ||| hypothesis ||| score".
    #[arg(long)]
    nbest: Option<usize>,
    #[arg(long, default_value_t = 60)]
    max_len: usize,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("vocabulary").required(true).args(["vocab", "model"]))]
struct EvalArgs {
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Vocabulary to measure reference coverage against.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Model directory; coverage is measured on factored reference stems.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    rules: RulesArg,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    sentences: usize,
    #[arg(long)]
    grammar: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    embed_dim: usize,
    #[arg(long, default_value_t = 6)]
    hidden_dim: usize,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[arg(long, value_enum, default_value_t = StencilArg::Central)]
    stencil: StencilArg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StencilArg {
    Central,
    FivePoint,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("MORPHSEQ_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
