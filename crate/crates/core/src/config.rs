//! TOML experiment configuration.
//!
//! ```toml
//! [simulation]
//! horizon = 60
//! seed = 42
//! runs = 100                    # Monte-Carlo runs, default 1
//! rng = "chacha20/..."          # optional; must match sim::RNG_ALGORITHM
//! prior_mean = [0.0, 0.0]       # optional, default zero
//! initial_covariance = { mode = "random_spd", eps0 = 0.1 }
//! # or { mode = "subsystems" }
//! #    { mode = "block_diagonal_scalar", low = 0.0, high = 1.0 }
//! #    { mode = "explicit", matrix = [[1.0, 0.1], [0.1, 2.0]] }
//!
//! [[subsystem]]
//! index = 1                     # optional, defaults to position
//! a = [[0.2]]
//! c = [[1.0]]
//! q = [[0.1]]
//! r = [[0.1]]
//! p = [[1.0]]
//!
//! [[coupling]]
//! i = 1
//! j = 2
//! l = [[0.3]]                   # n_i x p_j
//! ```
//!
//! Matrices are arrays of rows. Validation failures carry the line of the
//! offending table.

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::netmodel::{build_network, CouplingMap, NetworkModel, SubsystemModel};
use crate::sim::{InitialCovariance, SimConfig, RNG_ALGORITHM};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig<S, C, K> {
    simulation: S,
    #[serde(rename = "subsystem")]
    subsystems: Vec<C>,
    #[serde(rename = "coupling", default = "Vec::new", skip_serializing_if = "Vec::is_empty")]
    couplings: Vec<K>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    horizon: usize,
    seed: u64,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior_mean: Option<Vec<f64>>,
    initial_covariance: RawInitialCovariance,
}

fn default_runs() -> usize {
    1
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum RawInitialCovariance {
    Subsystems,
    BlockDiagonalScalar { low: f64, high: f64 },
    RandomSpd { eps0: f64 },
    Explicit { matrix: Rows },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSubsystem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    a: Rows,
    c: Rows,
    q: Rows,
    r: Rows,
    p: Rows,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    i: usize,
    j: usize,
    l: Rows,
}

type ParsedConfig = RawConfig<Spanned<RawSimulation>, Spanned<RawSubsystem>, Spanned<RawCoupling>>;

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

/// Line of the `[table]` or `[[table]]` header that opens the table
/// containing `offset`.
fn table_line(text: &str, offset: usize) -> usize {
    let line = line_of(text, offset);
    text.lines()
        .take(line)
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with('['))
        .map(|(i, _)| i + 1)
        .last()
        .unwrap_or(line)
}

fn invalid(entity: impl Into<String>, rule: impl Into<String>, line: usize) -> Error {
    Error::Validation {
        entity: entity.into(),
        rule: rule.into(),
        line: Some(line),
    }
}

fn to_matrix(rows: &Rows, entity: &str, line: usize) -> Result<Matrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(invalid(entity, "matrix must be non-empty", line));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(invalid(entity, "all rows must have the same length", line));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(entity, "entries must be finite", line));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn to_rows(m: &Matrix) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<(NetworkModel, SimConfig)> {
    let raw: ParsedConfig = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;

    let mut subsystems = Vec::with_capacity(raw.subsystems.len());
    let mut sub_lines = Vec::with_capacity(raw.subsystems.len());
    for (pos, spanned) in raw.subsystems.iter().enumerate() {
        let line = table_line(text, spanned.span().start);
        let s = spanned.get_ref();
        let index = s.index.unwrap_or(pos + 1);
        let name = |m: &str| format!("{m}_{index}");
        let sub = SubsystemModel::new(
            index,
            to_matrix(&s.a, &name("A"), line)?,
            to_matrix(&s.c, &name("C"), line)?,
            to_matrix(&s.q, &name("Q"), line)?,
            to_matrix(&s.r, &name("R"), line)?,
            to_matrix(&s.p, &name("P"), line)?,
        )
        .map_err(|e| invalid(format!("subsystem {index}"), e.to_string(), line))?;
        subsystems.push(sub);
        sub_lines.push((index, line));
    }
    if subsystems.is_empty() {
        return Err(Error::Validation {
            entity: "subsystem".into(),
            rule: "at least one [[subsystem]] is required".into(),
            line: None,
        });
    }
    let mut sorted: Vec<usize> = sub_lines.iter().map(|(i, _)| *i).collect();
    sorted.sort_unstable();
    if let Some(pos) = sorted.iter().enumerate().position(|(pos, i)| *i != pos + 1) {
        let bad = sorted[pos];
        let line = sub_lines.iter().find(|(i, _)| *i == bad).map_or(1, |(_, l)| *l);
        return Err(invalid(
            format!("subsystem {bad}"),
            format!("indices must be 1..={} without gaps or repeats", subsystems.len()),
            line,
        ));
    }

    let dims_of = |i: usize| subsystems.iter().find(|s| s.index() == i).map(|s| (s.state_dim(), s.output_dim()));
    let mut couplings = CouplingMap::new();
    for spanned in &raw.couplings {
        let line = table_line(text, spanned.span().start);
        let c = spanned.get_ref();
        let entity = format!("L_({},{})", c.i, c.j);
        let (Some((ni, _)), Some((_, pj))) = (dims_of(c.i), dims_of(c.j)) else {
            return Err(invalid(entity, "both indices must name declared subsystems", line));
        };
        let l = to_matrix(&c.l, &entity, line)?;
        if l.shape() != (ni, pj) {
            return Err(invalid(
                entity,
                format!("shape must be {ni}x{pj} (n_i x p_j), got {}x{}", l.nrows(), l.ncols()),
                line,
            ));
        }
        if couplings.insert((c.i, c.j), l).is_some() {
            return Err(invalid(entity, "coupling declared twice", line));
        }
    }
    let net = build_network(subsystems, couplings)?;

    let sim_line = table_line(text, raw.simulation.span().start);
    let s = raw.simulation.get_ref();
    if let Some(rng) = &s.rng {
        if rng != RNG_ALGORITHM {
            return Err(invalid("simulation.rng", format!("only \"{RNG_ALGORITHM}\" is supported"), sim_line));
        }
    }
    let n: usize = net.state_dims().iter().sum();
    let initial_covariance = match &s.initial_covariance {
        RawInitialCovariance::Subsystems => InitialCovariance::Subsystems,
        RawInitialCovariance::BlockDiagonalScalar { low, high } => InitialCovariance::BlockDiagonalScalar { low: *low, high: *high },
        RawInitialCovariance::RandomSpd { eps0 } => InitialCovariance::RandomSpd { eps0: *eps0 },
        RawInitialCovariance::Explicit { matrix } => {
            let p = to_matrix(matrix, "P", sim_line)?;
            if p.shape() != (n, n) {
                return Err(invalid("P", format!("explicit initial covariance must be {n}x{n}"), sim_line));
            }
            InitialCovariance::Explicit(p)
        }
    };
    let prior_mean = match &s.prior_mean {
        Some(m) if m.len() != n => {
            return Err(invalid("simulation.prior_mean", format!("length must be {n}"), sim_line));
        }
        Some(m) => Some(Vector::from_vec(m.clone())),
        None => None,
    };
    let cfg = SimConfig {
        horizon: s.horizon,
        seed: s.seed,
        initial_covariance,
        runs: s.runs,
        prior_mean,
    };
    cfg.validate()
        .map_err(|e| invalid("simulation", e.to_string(), sim_line))?;
    Ok((net, cfg))
}

/// Writes a configuration that [`parse_config`] maps back to the same
/// network and simulation settings.
pub fn serialize_config(net: &NetworkModel, cfg: &SimConfig) -> Result<String> {
    let initial_covariance = match &cfg.initial_covariance {
        InitialCovariance::Subsystems => RawInitialCovariance::Subsystems,
        InitialCovariance::BlockDiagonalScalar { low, high } => RawInitialCovariance::BlockDiagonalScalar { low: *low, high: *high },
        InitialCovariance::RandomSpd { eps0 } => RawInitialCovariance::RandomSpd { eps0: *eps0 },
        InitialCovariance::Explicit(p) => RawInitialCovariance::Explicit { matrix: to_rows(p) },
    };
    let raw = RawConfig {
        simulation: RawSimulation {
            horizon: cfg.horizon,
            seed: cfg.seed,
            runs: cfg.runs,
            rng: Some(RNG_ALGORITHM.to_string()),
            prior_mean: cfg.prior_mean.as_ref().map(|m| m.iter().copied().collect()),
            initial_covariance,
        },
        subsystems: net
            .subsystems()
            .iter()
            .map(|s| RawSubsystem {
                index: Some(s.index()),
                a: to_rows(s.a()),
                c: to_rows(s.c()),
                q: to_rows(s.q()),
                r: to_rows(s.r()),
                p: to_rows(s.p()),
            })
            .collect(),
        couplings: net
            .couplings()
            .iter()
            .map(|(&(i, j), l)| RawCoupling { i, j, l: to_rows(l) })
            .collect(),
    };
    toml::to_string(&raw).map_err(|e| Error::InvalidArgument(format!("cannot serialize config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[simulation]
horizon = 5
seed = 1
initial_covariance = { mode = "subsystems" }

[[subsystem]]
a = [[0.5]]
c = [[1.0]]
q = [[1.0]]
r = [[1.0]]
p = [[1.0]]
"#;

    #[test]
    fn minimal_config() {
        let (net, cfg) = parse_config(MINIMAL).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(cfg.runs, 1);
        assert_eq!(cfg.initial_covariance, InitialCovariance::Subsystems);
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = MINIMAL.replace("seed = 1", "seed = = 1");
        match parse_config(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_coupling_shape_names_the_pair() {
        let text = format!(
            "{MINIMAL}\n[[subsystem]]\na = [[0.5]]\nc = [[1.0]]\nq = [[1.0]]\nr = [[1.0]]\np = [[1.0]]\n\n[[coupling]]\ni = 1\nj = 2\nl = [[0.3, 0.1]]\n"
        );
        match parse_config(&text) {
            Err(Error::Validation { entity, line, .. }) => {
                assert_eq!(entity, "L_(1,2)");
                assert_eq!(line, Some(21));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_spd_and_ragged_matrices_rejected() {
        let text = MINIMAL.replace("q = [[1.0]]", "q = [[-1.0]]");
        assert!(matches!(parse_config(&text), Err(Error::Validation { line: Some(7), .. })));
        let text = MINIMAL.replace("p = [[1.0]]", "p = [[1.0], [2.0, 3.0]]");
        assert!(matches!(parse_config(&text), Err(Error::Validation { .. })));
        let text = MINIMAL.replace("seed = 1", "seed = 1\nrng = \"mt19937\"");
        assert!(matches!(parse_config(&text), Err(Error::Validation { .. })));
    }

    #[test]
    fn round_trip() {
        let (net, cfg) = parse_config(MINIMAL).unwrap();
        let text = serialize_config(&net, &cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), (net, cfg));
    }
}
