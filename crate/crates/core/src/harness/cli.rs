//! Command-line surface shared by the `matbench` binary and plan files.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{PatchSpec, TestSpec};
use crate::network::preset;

#[derive(Debug, Parser)]
#[command(name = "matbench", version, about = "Material-classification benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a single test.
    Run {
        #[command(flatten)]
        args: RunArgs,
        /// Output root; results go to `<out>/<test-name>/`.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Run every test of a plan file.
    Batch {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Summary table over the results in a directory.
    Report {
        #[arg(long, value_enum)]
        layout: ReportLayout,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Timing table over the results in a directory.
    Timings {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportLayout {
    PerCategoryTable,
    MapSummary,
    CommonGround,
}

#[derive(Debug, Clone, Args, PartialEq)]
pub struct RunArgs {
    /// Preset name or network spec file.
    #[arg(long)]
    pub arch: String,
    /// Dataset manifest.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub category: String,
    #[arg(long)]
    pub test_name: String,
    #[arg(long, env = "MATBENCH_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub c: f64,
    #[arg(long)]
    pub no_normalize: bool,
    /// `CX,CY,S`: patch center in pixels and scale relative to the smaller side.
    #[arg(long, value_parser = parse_patch)]
    pub patch: Option<PatchSpec>,
    /// FVEC file used instead of the network engine.
    #[arg(long)]
    pub features_in: Option<PathBuf>,
    /// Fraction of each sibling category's train half used as negatives.
    #[arg(long, default_value_t = 0.1)]
    pub neg_fraction: f64,
}

fn parse_patch(s: &str) -> Result<PatchSpec, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [cx, cy, scale] => Ok(PatchSpec {
            center: (cx, cy),
            scale,
        }),
        _ => Err(format!("expected CX,CY,S, got `{s}`")),
    }
}

impl RunArgs {
    /// Converts to a [`TestSpec`], resolving relative paths against `base`.
    pub fn to_spec(&self, base: &Path) -> TestSpec {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let arch = if preset(&self.arch, 0).is_some() || self.features_in.is_some() {
            self.arch.clone()
        } else {
            resolve(Path::new(&self.arch)).to_string_lossy().into_owned()
        };
        TestSpec {
            arch,
            dataset: resolve(&self.dataset),
            category: self.category.clone(),
            test_name: self.test_name.clone(),
            seed: self.seed,
            c: self.c,
            patch: self.patch,
            normalize: !self.no_normalize,
            features_in: self.features_in.as_deref().map(resolve),
            negative_fraction: self.neg_fraction,
        }
    }
}

#[derive(Debug, Parser)]
#[command(no_binary_name = true)]
struct PlanLine {
    #[command(flatten)]
    args: RunArgs,
}

/// Parses a plan: one `run` argument line per test (the leading `run` is
/// optional). Blank lines and `#` comments are skipped; relative paths are
/// taken relative to `base`.
pub fn parse_plan(text: &str, base: &Path) -> Result<Vec<TestSpec>, String> {
    let mut plan = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = shlex::split(line).ok_or_else(|| format!("line {}: unbalanced quotes", i + 1))?;
        if words.first().map(String::as_str) == Some("run") {
            words.remove(0);
        }
        let parsed = PlanLine::try_parse_from(words).map_err(|e| format!("line {}: {}", i + 1, e.render()))?;
        plan.push(parsed.args.to_spec(base));
    }
    if plan.is_empty() {
        return Err("plan contains no tests".into());
    }
    Ok(plan)
}
