use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use gwg::assembly::Solver;
use gwg::verify::{ManufacturedCase, MeshFamily, CATALOG};
use gwg::weakspace::WeakSpaceSignature;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Usage(#[from] clap::Error),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey { path: String, line: usize, key: String },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("cannot read config file {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeshArg {
    Tri,
    Rect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Direct,
    Cg,
}

/// Run a weak Galerkin convergence study on the unit square.
#[derive(Debug, Parser)]
#[command(name = "gwg", version)]
pub struct Args {
    /// Element degrees `k,j,l`: interior, edge, and weak gradient.
    #[arg(long)]
    pub element: Option<String>,
    #[arg(long, value_enum)]
    pub mesh: Option<MeshArg>,
    /// Comma-separated mesh labels `1/h`, strictly increasing.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// One of cospi_cospi, cospi_sinpi, x2_cospi, lowreg.
    #[arg(long)]
    pub case: Option<String>,
    /// Regularity exponent for `lowreg`.
    #[arg(long)]
    pub alpha: Option<String>,
    /// CSV output path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    /// Solve with zero data; errors then measure `Q_h u` itself.
    #[arg(long)]
    pub homogeneous: bool,
    /// Write the resolved configuration as comment lines atop the CSV.
    #[arg(long)]
    pub manifest: bool,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub element: WeakSpaceSignature,
    pub mesh: MeshArg,
    pub levels: Vec<usize>,
    pub rho: f64,
    pub gamma: f64,
    pub case: String,
    pub alpha: Option<f64>,
    pub output: Option<PathBuf>,
    pub solver: SolverArg,
    pub homogeneous: bool,
    pub manifest: bool,
}

impl StudyConfig {
    pub fn family(&self) -> MeshFamily {
        match self.mesh {
            MeshArg::Tri => MeshFamily::Triangular,
            MeshArg::Rect => MeshFamily::Rectangular,
        }
    }

    pub fn solver(&self) -> Solver {
        match self.solver {
            SolverArg::Direct => Solver::Direct,
            SolverArg::Cg => Solver::ConjugateGradient,
        }
    }

    pub fn manufactured_case(&self) -> Result<ManufacturedCase, ConfigError> {
        ManufacturedCase::by_name(&self.case, self.alpha).map_err(|e| bad("case", e.to_string()))
    }

    /// `key = value` lines, in the same syntax the config file accepts.
    pub fn manifest_lines(&self) -> Vec<String> {
        let s = self.element;
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut lines = vec![
            format!("element = {},{},{}", s.k, s.j, s.l),
            format!("mesh = {}", self.mesh),
            format!("levels = {}", join(&self.levels)),
            format!("rho = {:?}", self.rho),
            format!("gamma = {:?}", self.gamma),
            format!("case = {}", self.case),
        ];
        if let Some(a) = self.alpha {
            lines.push(format!("alpha = {a:?}"));
        }
        lines.push(format!("solver = {}", self.solver));
        lines.push(format!("homogeneous = {}", self.homogeneous));
        lines
    }
}

impl fmt::Display for MeshArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeshArg::Tri => "tri",
            MeshArg::Rect => "rect",
        })
    }
}

impl fmt::Display for SolverArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverArg::Direct => "direct",
            SolverArg::Cg => "cg",
        })
    }
}

const FILE_KEYS: [&str; 10] = [
    "element",
    "mesh",
    "levels",
    "rho",
    "gamma",
    "case",
    "alpha",
    "output",
    "solver",
    "homogeneous",
];

/// Reads a `key = value` file. Blank lines and `#` comments are skipped.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: name.clone(),
        source,
    })?;
    parse_config_text(&text, &name)
}

pub fn parse_config_text(text: &str, name: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                path: name.into(),
                line: i + 1,
            });
        };
        let key = k.trim();
        if !FILE_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                path: name.into(),
                line: i + 1,
                key: key.into(),
            });
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_element(s: &str) -> Result<WeakSpaceSignature, ConfigError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad("element", format!("expected three degrees `k,j,l`, got `{s}`")));
    }
    let mut d = [0usize; 3];
    for (slot, p) in d.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| bad("element", format!("`{p}` is not a nonnegative integer")))?;
    }
    Ok(WeakSpaceSignature::new(d[0], d[1], d[2]))
}

fn parse_levels(s: &str) -> Result<Vec<usize>, ConfigError> {
    let levels = s
        .split(',')
        .map(|p| {
            let p = p.trim();
            match p.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(bad("levels", format!("`{p}` is not a positive integer"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if levels.len() < 2 {
        return Err(bad("levels", "at least two levels are required"));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("levels", "levels must be strictly increasing"));
    }
    Ok(levels)
}

fn parse_real(key: &str, s: &str) -> Result<f64, ConfigError> {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(bad(key, format!("`{s}` is not a finite number"))),
    }
}

fn parse_enum<T: ValueEnum>(key: &str, s: &str) -> Result<T, ConfigError> {
    T::from_str(s.trim(), true).map_err(|_| bad(key, format!("unrecognised value `{s}`")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool, ConfigError> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, format!("`{s}` is not a boolean"))),
    }
}

/// Merges file values with flags (flags win) and checks every invariant.
pub fn resolve(args: Args) -> Result<StudyConfig, ConfigError> {
    let file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => Vec::new(),
    };
    let from_file = |key: &str| file.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    let pick = |flag: &Option<String>, key: &str| flag.clone().or_else(|| from_file(key));

    let element = pick(&args.element, "element").ok_or_else(|| bad("element", "required (e.g. `--element 1,1,0`)"))?;
    let element = parse_element(&element)?;
    let mesh = match args.mesh {
        Some(m) => m,
        None => from_file("mesh")
            .map(|v| parse_enum("mesh", &v))
            .transpose()?
            .unwrap_or(MeshArg::Tri),
    };
    let levels = pick(&args.levels, "levels").ok_or_else(|| bad("levels", "required (e.g. `--levels 8,16,32`)"))?;
    let levels = parse_levels(&levels)?;
    if mesh == MeshArg::Rect {
        if let Some(l) = levels.iter().find(|&&l| l < 2 || !l.is_power_of_two()) {
            return Err(bad("levels", format!("rectangular meshes need 1/h = 2 * 2^L, got {l}")));
        }
    }
    let rho = pick(&args.rho, "rho").map(|v| parse_real("rho", &v)).transpose()?.unwrap_or(1.0);
    if rho < 0.0 {
        return Err(bad("rho", "must be nonnegative"));
    }
    let gamma = pick(&args.gamma, "gamma")
        .map(|v| parse_real("gamma", &v))
        .transpose()?
        .unwrap_or(-1.0);
    let case = pick(&args.case, "case").unwrap_or_else(|| "cospi_cospi".into());
    if !CATALOG.contains(&case.as_str()) {
        return Err(bad(
            "case",
            format!("unknown case `{case}`; expected one of {}", CATALOG.join(", ")),
        ));
    }
    let alpha = pick(&args.alpha, "alpha").map(|v| parse_real("alpha", &v)).transpose()?;
    if case == "lowreg" {
        match alpha {
            Some(a) if a > 0.0 && a <= 1.0 => {}
            Some(a) => return Err(bad("alpha", format!("must lie in (0, 1], got {a}"))),
            None => return Err(bad("alpha", "required for case `lowreg`")),
        }
    }
    let output = args.output.clone().or_else(|| from_file("output").map(PathBuf::from));
    let solver = match args.solver {
        Some(s) => s,
        None => from_file("solver")
            .map(|v| parse_enum("solver", &v))
            .transpose()?
            .unwrap_or(SolverArg::Direct),
    };
    let homogeneous = args.homogeneous
        || from_file("homogeneous")
            .map(|v| parse_bool("homogeneous", &v))
            .transpose()?
            .unwrap_or(false);

    Ok(StudyConfig {
        element,
        mesh,
        levels,
        rho,
        gamma,
        case,
        alpha,
        output,
        solver,
        homogeneous,
        manifest: args.manifest,
    })
}

pub fn parse_config<I, T>(argv: I) -> Result<StudyConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    resolve(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<StudyConfig, ConfigError> {
        parse_config(std::iter::once("gwg").chain(s.split_whitespace()))
    }

    #[test]
    fn defaults_and_flags() {
        let c = parse("--element 3,4,4 --mesh tri --levels 8,16,32,64").unwrap();
        assert_eq!(c.element, WeakSpaceSignature::new(3, 4, 4));
        assert_eq!(c.levels, vec![8, 16, 32, 64]);
        assert_eq!((c.rho, c.gamma, c.case.as_str()), (1.0, -1.0, "cospi_cospi"));
        assert_eq!((c.mesh, c.solver), (MeshArg::Tri, SolverArg::Direct));
        let c = parse("--element 0,0,0 --levels 2,4 --rho 0 --gamma -1e-5").unwrap();
        assert_eq!((c.rho, c.gamma), (0.0, -1e-5));
    }

    #[test]
    fn lowreg_alpha() {
        let c = parse("--element 1,0,1 --levels 4,8 --case lowreg --alpha 0.03125").unwrap();
        assert_eq!(c.alpha, Some(0.03125));
        for bad in ["--alpha 0", "--alpha 1.5", ""] {
            let e = parse(&format!("--element 1,0,1 --levels 4,8 --case lowreg {bad}")).unwrap_err();
            assert!(e.to_string().contains("alpha"), "{e}");
        }
    }

    #[test]
    fn errors_name_the_key() {
        for (args, key) in [
            ("--element 1,1 --levels 2,4", "element"),
            ("--element 1,1,x --levels 2,4", "element"),
            ("--element 1,1,1 --levels 4", "levels"),
            ("--element 1,1,1 --levels 4,4", "levels"),
            ("--element 1,1,1 --levels 8,4", "levels"),
            ("--element 1,1,1 --levels 2,4 --rho -1", "rho"),
            ("--element 1,1,1 --levels 2,4 --case nope", "case"),
            ("--element 1,1,1 --levels 12,24 --mesh rect", "levels"),
            ("--levels 2,4", "element"),
        ] {
            let e = parse(args).unwrap_err();
            assert!(e.to_string().contains(key), "{args}: {e}");
        }
        assert!(matches!(
            parse("--element 1,1,1 --levels 2,4 --bogus 3"),
            Err(ConfigError::Usage(_))
        ));
    }

    #[test]
    fn config_file_and_override() {
        let text = "# study\nelement = 2,1,3\nlevels = 2, 4\nrho = 0\n\nmesh = rect\n";
        let kv = parse_config_text(text, "f").unwrap();
        assert_eq!(kv.len(), 4);
        let e = parse_config_text("element = 1,1,1\nwibble = 3\n", "f").unwrap_err();
        assert!(matches!(&e, ConfigError::UnknownKey { key, line: 2, .. } if key == "wibble"), "{e}");
        assert!(matches!(
            parse_config_text("element\n", "f"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("study.cfg");
        std::fs::write(&path, "element = 2,1,3\nlevels = 8,16\nmesh = rect\nrho = 0\ngamma = 2\n").unwrap();
        let c = parse(&format!("--config {} --gamma 0.5", path.display())).unwrap();
        assert_eq!(c.element, WeakSpaceSignature::new(2, 1, 3));
        assert_eq!((c.mesh, c.rho, c.gamma), (MeshArg::Rect, 0.0, 0.5));
    }

    #[test]
    fn manifest_round_trips_through_the_file_syntax() {
        let c = parse("--element 1,0,1 --levels 4,8 --case lowreg --alpha 0.5 --rho 0.25 --solver cg --homogeneous").unwrap();
        let text = c.manifest_lines().join("\n");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.cfg");
        std::fs::write(&path, text).unwrap();
        let d = parse(&format!("--config {}", path.display())).unwrap();
        assert_eq!(c, d);
    }
}
