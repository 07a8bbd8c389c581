//! Run configuration: command-line flags over a `key = value` config file
//! over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use cutie::network::ArchConfig;
use cutie::sim::RowAdvance;
use cutie::CostModelF64;

#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// Config file with `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cost-model file; defaults to $CUTIE_COST_MODEL, then the built-in 22 nm constants.
    #[arg(long, global = true)]
    pub cost_model: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n_i: Option<usize>,
    #[arg(long, global = true)]
    pub n_o: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub i_w: Option<usize>,
    #[arg(long, global = true)]
    pub i_h: Option<usize>,
    #[arg(long, global = true)]
    pub l: Option<usize>,
    #[arg(long, global = true)]
    pub p: Option<usize>,
    #[arg(long, global = true)]
    pub w_s: Option<usize>,
    /// Row advance of the tile buffer: stall or hide.
    #[arg(long, global = true)]
    pub row_advance: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub arch: ArchConfig,
    pub cost_model: Option<PathBuf>,
    pub seed: u64,
    pub row_advance: RowAdvance,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            arch: ArchConfig::default(),
            cost_model: None,
            seed: 0,
            row_advance: RowAdvance::Stall,
        }
    }
}

pub fn parse_row_advance(s: &str) -> Result<RowAdvance> {
    match s.trim().to_ascii_lowercase().as_str() {
        "stall" => Ok(RowAdvance::Stall),
        "hide" => Ok(RowAdvance::Hide),
        _ => bail!(crate::Usage(format!("unknown row advance `{s}` (stall or hide)"))),
    }
}

impl RunConfig {
    /// Apply a config file on top of `self`.
    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!(crate::Usage(format!("{}:{}: expected `key = value`", path.display(), i + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            let num = || -> Result<usize> {
                v.parse()
                    .map_err(|_| crate::Usage(format!("{}:{}: `{k}` needs an integer", path.display(), i + 1)).into())
            };
            match k {
                "n_i" => self.arch.n_i = num()?,
                "n_o" => self.arch.n_o = num()?,
                "k" => self.arch.k = num()?,
                "i_w" => self.arch.i_w = num()?,
                "i_h" => self.arch.i_h = num()?,
                "l" => self.arch.l = num()?,
                "p" => self.arch.p = num()?,
                "w_s" => self.arch.w_s = num()?,
                "seed" => self.seed = num()? as u64,
                "row_advance" => self.row_advance = parse_row_advance(v)?,
                "cost_model" => {
                    // relative to the config file
                    let p = PathBuf::from(v);
                    self.cost_model = Some(if p.is_relative() {
                        path.parent().unwrap_or(Path::new(".")).join(p)
                    } else {
                        p
                    });
                }
                _ => bail!(crate::Usage(format!("{}:{}: unknown key `{k}`", path.display(), i + 1))),
            }
        }
        Ok(())
    }

    pub fn resolve(args: &ConfigArgs) -> Result<Self> {
        let mut c = Self::default();
        if let Some(path) = &args.config {
            c.apply_file(path)?;
        }
        let a = &mut c.arch;
        for (dst, src) in [
            (&mut a.n_i, args.n_i),
            (&mut a.n_o, args.n_o),
            (&mut a.k, args.k),
            (&mut a.i_w, args.i_w),
            (&mut a.i_h, args.i_h),
            (&mut a.l, args.l),
            (&mut a.p, args.p),
            (&mut a.w_s, args.w_s),
        ] {
            if let Some(v) = src {
                *dst = v;
            }
        }
        if let Some(s) = args.seed {
            c.seed = s;
        }
        if let Some(p) = &args.cost_model {
            c.cost_model = Some(p.clone());
        }
        if let Some(r) = &args.row_advance {
            c.row_advance = parse_row_advance(r)?;
        }
        c.arch.check()?;
        Ok(c)
    }

    pub fn cost(&self) -> Result<CostModelF64> {
        Ok(match &self.cost_model {
            Some(p) => CostModelF64::load(p)?,
            None => CostModelF64::from_env()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file_override_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# test\nseed = 5\ni_w = 16\ni_h = 16").unwrap();
        let args = ConfigArgs {
            config: Some(f.path().to_path_buf()),
            i_w: Some(24),
            ..Default::default()
        };
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.arch.i_w, 24);
        assert_eq!(c.arch.i_h, 16);
        assert_eq!(c.arch.n_i, 128);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "speed = 3").unwrap();
        let args = ConfigArgs {
            config: Some(f.path().to_path_buf()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args).is_err());
    }
}
