//! Effective experiment specification: defaults, overridden by a config
//! file, overridden by command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use qcdma::metrics::Background;
use qcdma::network::FilterRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    TextTable,
}

impl OutputFormat {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "table" | "text-table" => Ok(OutputFormat::TextTable),
            other => bail!("unknown format `{other}` (expected csv|json|table)"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::TextTable => "table",
        }
    }
}

/// Bits per user: either a bin count with random fill, or explicit
/// per-user patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BitSpec {
    Count(usize),
    Patterns(Vec<Vec<bool>>),
}

impl BitSpec {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        if s.chars().all(|c| c.is_ascii_digit()) && !s.chars().all(|c| c == '0' || c == '1') {
            let count: usize = s.parse().context("bad bit count")?;
            return Ok(BitSpec::Count(count));
        }
        if let Ok(count) = s.parse::<usize>() {
            // short all-0/1 strings are ambiguous; counts up to 2 digits win
            if s.len() <= 2 {
                return Ok(BitSpec::Count(count));
            }
        }
        let mut patterns = Vec::new();
        for part in s.split(',') {
            let mut row = Vec::with_capacity(part.len());
            for c in part.chars() {
                match c {
                    '0' => row.push(false),
                    '1' => row.push(true),
                    other => bail!("bit pattern may only contain 0/1, found `{other}`"),
                }
            }
            if row.is_empty() {
                bail!("empty bit pattern");
            }
            patterns.push(row);
        }
        let len = patterns[0].len();
        if patterns.iter().any(|p| p.len() != len) {
            bail!("bit patterns must all have the same length");
        }
        Ok(BitSpec::Patterns(patterns))
    }

    pub fn bin_count(&self) -> usize {
        match self {
            BitSpec::Count(c) => *c,
            BitSpec::Patterns(p) => p[0].len(),
        }
    }
}

/// Everything one invocation needs; also the reproducibility header that
/// gets embedded into every output file.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub exponents: Vec<u32>,
    pub users: Vec<usize>,
    pub trials: usize,
    pub runs: usize,
    pub bits: BitSpec,
    pub seed: u64,
    pub samples_per_chip: usize,
    pub filter_rule: FilterRule,
    pub background: Background,
    pub in_phase: bool,
    pub allow_large: bool,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            exponents: vec![10],
            users: vec![5],
            trials: 200,
            runs: 128,
            bits: BitSpec::Count(8),
            seed: 0,
            samples_per_chip: 2,
            filter_rule: FilterRule::Wide,
            background: Background::Silent,
            in_phase: false,
            allow_large: false,
            format: OutputFormat::Csv,
            out: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.exponents.is_empty() || self.users.is_empty() {
            bail!("sweep lists for n and users must be non-empty");
        }
        if self.trials == 0 || self.runs == 0 {
            bail!("trials and runs must be at least 1");
        }
        for &n in &self.exponents {
            if n > 15 && !self.allow_large {
                bail!(
                    "n = {n} exceeds 15; memory grows linearly in S, pass --allow-large to proceed"
                );
            }
        }
        Ok(())
    }

    /// `# key: value` header lines embedding the full effective spec.
    pub fn header(&self, command: &str) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "# qcdma {command}");
        let _ = writeln!(
            h,
            "# n: {}",
            self.exponents
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(
            h,
            "# users: {}",
            self.users
                .iter()
                .map(|u| u.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(h, "# trials: {}", self.trials);
        let _ = writeln!(h, "# runs: {}", self.runs);
        match &self.bits {
            BitSpec::Count(c) => {
                let _ = writeln!(h, "# bits: {c}");
            }
            BitSpec::Patterns(p) => {
                let pats: Vec<String> = p
                    .iter()
                    .map(|row| row.iter().map(|&b| if b { '1' } else { '0' }).collect())
                    .collect();
                let _ = writeln!(h, "# bits: {}", pats.join(","));
            }
        }
        let _ = writeln!(h, "# seed: {}", self.seed);
        let _ = writeln!(h, "# samples-per-chip: {}", self.samples_per_chip);
        let _ = writeln!(h, "# filter-rule: {}", self.filter_rule.name());
        let _ = writeln!(h, "# background: {}", self.background.name());
        let _ = writeln!(h, "# in-phase: {}", self.in_phase);
        let _ = writeln!(h, "# format: {}", self.format.name());
        h
    }

    /// JSON object mirroring the header for embedding in JSON outputs.
    pub fn to_json(&self, command: &str) -> serde_json::Value {
        let bits = match &self.bits {
            BitSpec::Count(c) => serde_json::json!(c),
            BitSpec::Patterns(p) => {
                let pats: Vec<String> = p
                    .iter()
                    .map(|row| row.iter().map(|&b| if b { '1' } else { '0' }).collect())
                    .collect();
                serde_json::json!(pats)
            }
        };
        serde_json::json!({
            "command": command,
            "n": self.exponents,
            "users": self.users,
            "trials": self.trials,
            "runs": self.runs,
            "bits": bits,
            "seed": self.seed,
            "samples_per_chip": self.samples_per_chip,
            "filter_rule": self.filter_rule.name(),
            "background": self.background.name(),
            "in_phase": self.in_phase,
            "format": self.format.name(),
        })
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<Vec<T>> {
    value
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| anyhow::anyhow!("key `{key}`: cannot parse `{p}`"))
        })
        .collect()
}

/// Apply one `key: value` assignment from a configuration file.
fn apply_key(spec: &mut ExperimentSpec, key: &str, value: &str) -> anyhow::Result<()> {
    match key {
        "n" => spec.exponents = parse_list(key, value)?,
        "users" => spec.users = parse_list(key, value)?,
        "trials" => {
            spec.trials = value
                .parse()
                .map_err(|_| anyhow::anyhow!("key `trials`: cannot parse `{value}`"))?
        }
        "runs" => {
            spec.runs = value
                .parse()
                .map_err(|_| anyhow::anyhow!("key `runs`: cannot parse `{value}`"))?
        }
        "bits" => spec.bits = BitSpec::parse(value).context("key `bits`")?,
        "seed" => {
            spec.seed = value
                .parse()
                .map_err(|_| anyhow::anyhow!("key `seed`: cannot parse `{value}`"))?
        }
        "samples-per-chip" => {
            spec.samples_per_chip = value
                .parse()
                .map_err(|_| anyhow::anyhow!("key `samples-per-chip`: cannot parse `{value}`"))?
        }
        "filter-rule" => spec.filter_rule = FilterRule::parse(value).map_err(|e| anyhow::anyhow!("key `filter-rule`: {e}"))?,
        "background" => spec.background = Background::parse(value).map_err(|e| anyhow::anyhow!("key `background`: {e}"))?,
        "in-phase" => {
            spec.in_phase = value
                .parse()
                .map_err(|_| anyhow::anyhow!("key `in-phase`: expected true/false, got `{value}`"))?
        }
        "allow-large" => {
            spec.allow_large = value
                .parse()
                .map_err(|_| anyhow::anyhow!("key `allow-large`: expected true/false, got `{value}`"))?
        }
        "format" => spec.format = OutputFormat::parse(value).context("key `format`")?,
        other => bail!("unknown configuration key `{other}`"),
    }
    Ok(())
}

/// Parse a plain-text `key: value` configuration file onto the defaults.
/// Lines starting with `#` and blank lines are ignored.
pub fn load_config(path: &Path) -> anyhow::Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut spec = ExperimentSpec::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .with_context(|| format!("line {}: expected `key: value`, got `{line}`", lineno + 1))?;
        apply_key(&mut spec, key.trim(), value.trim())
            .with_context(|| format!("line {}", lineno + 1))?;
    }
    Ok(spec)
}
