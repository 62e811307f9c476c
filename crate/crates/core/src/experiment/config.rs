//! Experiment configuration: flat `key = value` text in `[section]` blocks.
//!
//! ```text
//! [common]
//! d = 6
//! k = 1
//! seeds = 0..20
//! [search]
//! restarts = 32
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::learners::SearchConfig;
use crate::realizability::Family;
use crate::task_model::FeatureLaw;

/// What an experiment run does per seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    MetalearnMon,
    MetalearnReal,
    MetalearnAgn,
    Multitask,
    Reduction,
    Verify,
    VcWitness,
    NrcScan,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::MetalearnMon,
        Mode::MetalearnReal,
        Mode::MetalearnAgn,
        Mode::Multitask,
        Mode::Reduction,
        Mode::Verify,
        Mode::VcWitness,
        Mode::NrcScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::MetalearnMon => "metalearn-mon",
            Mode::MetalearnReal => "metalearn-real",
            Mode::MetalearnAgn => "metalearn-agn",
            Mode::Multitask => "multitask",
            Mode::Reduction => "reduction",
            Mode::Verify => "verify",
            Mode::VcWitness => "vc-witness",
            Mode::NrcScan => "nrc-scan",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown mode `{s}`")))
    }
}

/// How representation error is estimated on fresh tasks.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub eval_tasks: usize,
    pub test_points: usize,
}

/// Metalearner plugged into the multitask-from-meta reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaChoice {
    Realizable,
    Agnostic,
}

impl MetaChoice {
    fn name(self) -> &'static str {
        match self {
            MetaChoice::Realizable => "realizable",
            MetaChoice::Agnostic => "agnostic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionConfig {
    /// Error/confidence tradeoff constant; has no default.
    pub c: Option<f64>,
    pub metalearner: MetaChoice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub instances: usize,
    pub atoms: usize,
    pub grid: u32,
    pub mc_draws: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub d: usize,
    pub k: usize,
    pub t: usize,
    pub n: usize,
    pub n_spec: usize,
    pub noise: f64,
    pub epsilon: f64,
    pub family: Family,
    pub features: FeatureLaw,
    pub offset_range: f64,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// The `seed` field is replaced per experiment seed.
    pub search: SearchConfig,
    pub eval: EvalConfig,
    pub reduction: ReductionConfig,
    pub verify: VerifyConfig,
    pub triples: Vec<(usize, usize, usize)>,
    pub sizes: Vec<usize>,
}

impl ExperimentConfig {
    /// Defaults for `mode`; these are what an empty config file yields.
    pub fn defaults(mode: Mode) -> Self {
        ExperimentConfig {
            mode,
            d: 4,
            k: 1,
            t: 100,
            n: if mode == Mode::MetalearnMon { 2 } else { 3 },
            n_spec: 50,
            noise: 0.0,
            epsilon: 0.15,
            family: if mode == Mode::MetalearnMon { Family::Monotone } else { Family::Halfspace },
            features: FeatureLaw::Gaussian,
            offset_range: 1.0,
            seeds: vec![0],
            out: PathBuf::from("results"),
            search: SearchConfig::default(),
            eval: EvalConfig { eval_tasks: 200, test_points: 200 },
            reduction: ReductionConfig { c: None, metalearner: MetaChoice::Realizable },
            verify: VerifyConfig { instances: 50, atoms: 6, grid: 4, mc_draws: 100_000 },
            triples: vec![(1, 1, 1), (2, 1, 2), (1, 2, 2), (2, 1, 1)],
            sizes: vec![3, 4],
        }
    }

    /// Parses and validates a config for `mode`.
    pub fn parse(mode: Mode, text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::defaults(mode);
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(line, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(config_err(line, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{body}`")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| config_err(line, "key outside of any section"))?;
            cfg.set(sec, key.trim(), value.trim())
                .map_err(|message| config_err(line, message))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> std::result::Result<(), String> {
        match (section, key) {
            ("common", "d") => self.d = num(key, v)?,
            ("common", "k") => self.k = num(key, v)?,
            ("common", "t") => self.t = num(key, v)?,
            ("common", "n") => self.n = num(key, v)?,
            ("common", "n_spec") => self.n_spec = num(key, v)?,
            ("common", "noise") => self.noise = num(key, v)?,
            ("common", "epsilon") => self.epsilon = num(key, v)?,
            ("common", "family") => self.family = v.parse().map_err(|e: Error| e.to_string())?,
            ("common", "features") => self.features = v.parse().map_err(|e: Error| e.to_string())?,
            ("common", "offset_range") => self.offset_range = num(key, v)?,
            ("common", "seeds") => self.seeds = parse_seeds(v)?,
            ("common", "out") => self.out = PathBuf::from(v),
            ("search", "restarts") => self.search.restarts = num(key, v)?,
            ("search", "iters") => self.search.iters = num(key, v)?,
            ("search", "step0") => self.search.step0 = num(key, v)?,
            ("search", "decay") => self.search.decay = num(key, v)?,
            ("search", "pool") => self.search.pool = num(key, v)?,
            ("eval", "eval_tasks") => self.eval.eval_tasks = num(key, v)?,
            ("eval", "test_points") => self.eval.test_points = num(key, v)?,
            ("reduction", "c") => self.reduction.c = Some(num(key, v)?),
            ("reduction", "metalearner") => {
                self.reduction.metalearner = match v {
                    "realizable" => MetaChoice::Realizable,
                    "agnostic" => MetaChoice::Agnostic,
                    _ => return Err(format!("unknown metalearner `{v}`")),
                }
            }
            ("verify", "instances") => self.verify.instances = num(key, v)?,
            ("verify", "atoms") => self.verify.atoms = num(key, v)?,
            ("verify", "grid") => self.verify.grid = num(key, v)?,
            ("verify", "mc_draws") => self.verify.mc_draws = num(key, v)?,
            ("vc-witness", "triples") => self.triples = parse_triples(v)?,
            ("nrc-scan", "sizes") => self.sizes = parse_list(v)?,
            _ => return Err(format!("unknown key `{key}` in [{section}]")),
        }
        Ok(())
    }

    /// Checks the cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("d", self.d),
            ("k", self.k),
            ("t", self.t),
            ("n", self.n),
            ("n_spec", self.n_spec),
            ("eval_tasks", self.eval.eval_tasks),
            ("test_points", self.eval.test_points),
            ("instances", self.verify.instances),
            ("atoms", self.verify.atoms),
            ("grid", self.verify.grid as usize),
            ("mc_draws", self.verify.mc_draws as usize),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("`{name}` must be positive")));
        }
        if self.k > self.d {
            return Err(Error::invalid(format!("k = {} exceeds d = {}", self.k, self.d)));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err(Error::invalid(format!("noise {} outside [0, 0.5)", self.noise)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if !(self.offset_range.is_finite() && self.offset_range >= 0.0) {
            return Err(Error::invalid("offset_range must be finite and nonnegative"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("no seeds"));
        }
        self.search.validate()?;
        if self.family == Family::Monotone && self.k != 1 {
            return Err(Error::invalid("monotone thresholds need k = 1"));
        }
        match self.mode {
            Mode::MetalearnMon if self.family != Family::Monotone || self.n != 2 => {
                Err(Error::invalid("metalearn-mon needs family = monotone and n = 2"))
            }
            Mode::Reduction => match self.reduction.c {
                Some(c) if c > 0.0 && c.is_finite() => Ok(()),
                Some(c) => Err(Error::invalid(format!("c = {c} must be positive"))),
                None => Err(Error::invalid("reduction mode needs `c` in [reduction]")),
            },
            _ => Ok(()),
        }
    }

    /// Every setting, defaults included, in the config syntax.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let f = fmt_float;
        let _ = writeln!(s, "# mode: {}", self.mode);
        let _ = writeln!(s, "[common]");
        for (k, v) in [
            ("d", self.d.to_string()),
            ("k", self.k.to_string()),
            ("t", self.t.to_string()),
            ("n", self.n.to_string()),
            ("n_spec", self.n_spec.to_string()),
            ("noise", f(self.noise)),
            ("epsilon", f(self.epsilon)),
            ("family", self.family.to_string()),
            ("features", self.features.to_string()),
            ("offset_range", f(self.offset_range)),
            ("seeds", self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(", ")),
            ("out", self.out.display().to_string()),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "[search]");
        let _ = writeln!(s, "restarts = {}", self.search.restarts);
        let _ = writeln!(s, "iters = {}", self.search.iters);
        let _ = writeln!(s, "step0 = {}", f(self.search.step0));
        let _ = writeln!(s, "decay = {}", f(self.search.decay));
        let _ = writeln!(s, "pool = {}", self.search.pool);
        let _ = writeln!(s, "[eval]");
        let _ = writeln!(s, "eval_tasks = {}", self.eval.eval_tasks);
        let _ = writeln!(s, "test_points = {}", self.eval.test_points);
        let _ = writeln!(s, "[reduction]");
        match self.reduction.c {
            Some(c) => {
                let _ = writeln!(s, "c = {}", f(c));
            }
            None => {
                let _ = writeln!(s, "# c is unset");
            }
        }
        let _ = writeln!(s, "metalearner = {}", self.reduction.metalearner.name());
        let _ = writeln!(s, "[verify]");
        let _ = writeln!(s, "instances = {}", self.verify.instances);
        let _ = writeln!(s, "atoms = {}", self.verify.atoms);
        let _ = writeln!(s, "grid = {}", self.verify.grid);
        let _ = writeln!(s, "mc_draws = {}", self.verify.mc_draws);
        let _ = writeln!(s, "[vc-witness]");
        let triples: Vec<String> =
            self.triples.iter().map(|(t, d, k)| format!("{t}:{d}:{k}")).collect();
        let _ = writeln!(s, "triples = {}", triples.join(", "));
        let _ = writeln!(s, "[nrc-scan]");
        let sizes: Vec<String> = self.sizes.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "sizes = {}", sizes.join(", "));
        s
    }
}

const SECTIONS: [&str; 7] = ["common", "search", "eval", "reduction", "verify", "vc-witness", "nrc-scan"];

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}` as a value for `{key}`"))
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("cannot parse list entry `{s}`")))
        .collect()
}

/// `a..b` (half-open) or a comma-separated list.
pub fn parse_seeds(v: &str) -> std::result::Result<Vec<u64>, String> {
    if let Some((a, b)) = v.split_once("..") {
        let a: u64 = num("seeds", a.trim())?;
        let b: u64 = num("seeds", b.trim())?;
        if b <= a {
            return Err(format!("empty seed range `{v}`"));
        }
        return Ok((a..b).collect());
    }
    parse_list(v)
}

fn parse_triples(v: &str) -> std::result::Result<Vec<(usize, usize, usize)>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let parts: Vec<usize> = s
                .split(':')
                .map(|p| p.trim().parse().map_err(|_| format!("bad triple `{s}`")))
                .collect::<std::result::Result<_, _>>()?;
            match parts[..] {
                [t, d, k] => Ok((t, d, k)),
                _ => Err(format!("triple `{s}` needs the form t:d:k")),
            }
        })
        .collect()
}

/// Nine significant digits, printed in the shortest form that reads back to
/// the rounded value.
pub fn fmt_float(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    let s = rounded.to_string();
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_yields_defaults() {
        let cfg = ExperimentConfig::parse(Mode::MetalearnReal, "").unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults(Mode::MetalearnReal));
        let mon = ExperimentConfig::parse(Mode::MetalearnMon, "").unwrap();
        assert_eq!((mon.family, mon.n), (Family::Monotone, 2));
    }

    #[test]
    fn parses_sections_and_comments() {
        let text = "# demo\n[common]\nd = 6 # inline\nseeds = 3..6\nfamily = halfspace\n\n[search]\nrestarts = 4\n[reduction]\nc = 8\n[vc-witness]\ntriples = 1:1:1, 2:1:2\n";
        let cfg = ExperimentConfig::parse(Mode::Reduction, text).unwrap();
        assert_eq!(cfg.d, 6);
        assert_eq!(cfg.seeds, vec![3, 4, 5]);
        assert_eq!(cfg.search.restarts, 4);
        assert_eq!(cfg.reduction.c, Some(8.0));
        assert_eq!(cfg.triples, vec![(1, 1, 1), (2, 1, 2)]);
    }

    #[test]
    fn echo_reads_back() {
        let text = "[common]\nnoise = 0.1\nseeds = 1, 7, 9\n[reduction]\nc = 2.5\n[nrc-scan]\nsizes = 3,5\n";
        let cfg = ExperimentConfig::parse(Mode::Reduction, text).unwrap();
        assert_eq!(ExperimentConfig::parse(Mode::Reduction, &cfg.echo()).unwrap(), cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[common]\nd = 4\nbogus = 1\n", 3),
            ("d = 4\n", 1),
            ("[common]\n[nowhere]\n", 2),
            ("[common]\nd = four\n", 2),
            ("[common]\nd\n", 2),
            ("[search\n", 1),
        ];
        for (text, line) in cases {
            match ExperimentConfig::parse(Mode::Multitask, text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn semantic_validation() {
        for text in [
            "[common]\nt = 0\n",
            "[common]\nnoise = 0.5\n",
            "[common]\nepsilon = 1\n",
            "[common]\nk = 5\nd = 4\n",
            "[common]\nseeds = 5..5\n",
            "[search]\ndecay = 0\n",
        ] {
            assert!(ExperimentConfig::parse(Mode::Multitask, text).is_err(), "{text:?}");
        }
        assert!(matches!(
            ExperimentConfig::parse(Mode::Reduction, ""),
            Err(Error::InvalidInput(_))
        ));
        assert!(ExperimentConfig::parse(Mode::MetalearnMon, "[common]\nn = 3\n").is_err());
    }

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(0.15), "0.15");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(-0.0), "0");
        assert_eq!(fmt_float(2.0), "2");
        assert_eq!(fmt_float(123456789012.0), "123456789000");
    }

    #[test]
    fn mode_names() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("train".parse::<Mode>().is_err());
    }
}
