//! Text checkpoint format for a topology plus its parameters.
//!
//! A checkpoint is a single line-oriented document:
//!
//! ```text
//! kuramoto-ep-checkpoint v1
//! topology all-to-all units=85 inputs=64 hidden=11 outputs=10
//! roles II...IHH...HOO...O
//! weights 1554
//! 0 64 -1.06630135831649696e-1
//! ...
//! biases 21
//! 64 0.00000000000000000e0 -2.48915319592382385e0
//! ...
//! end
//! ```
//!
//! For a layered network the topology line reads
//! `topology layered layers=64,20,10`. The `roles` line spells one of
//! `I`/`H`/`O` per unit and must match the unit-ordering convention (inputs,
//! then hidden, then outputs). Weight lines are `(i, j, value)` triples with
//! `i < j`, one per coupled pair, in any order but without duplicates or
//! gaps; bias lines are `(unit, h, psi)` for every non-input unit. Values are
//! written with 18 significant digits, so parsing reproduces every `f64`
//! bit-exactly.

use std::fs;
use std::path::Path;
use thiserror::Error;

use crate::model::ModelParameters;
use crate::topology::{NetworkTopology, UnitRole};

const HEADER: &str = "kuramoto-ep-checkpoint v1";

/// Upper bound on the unit count accepted when parsing; keeps the quadratic
/// all-to-all pair allocation bounded on untrusted input.
pub const MAX_UNITS: usize = 1024;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("checkpoint inconsistent: {0}")]
    Validation(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> CheckpointError {
    CheckpointError::Parse {
        line,
        message: message.into(),
    }
}

/// Serialize a topology and its parameters into the checkpoint document.
pub fn to_string(topology: &NetworkTopology, params: &ModelParameters) -> String {
    assert!(params.matches(topology), "parameters do not fit topology");
    assert!(params.all_finite(), "refusing to serialize non-finite parameters");
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    match topology.layer_sizes() {
        Some(sizes) => {
            let sizes: Vec<String> = sizes.iter().map(usize::to_string).collect();
            out.push_str(&format!("topology layered layers={}\n", sizes.join(",")));
        }
        None => {
            out.push_str(&format!(
                "topology all-to-all units={} inputs={} hidden={} outputs={}\n",
                topology.n_units(),
                topology.n_inputs(),
                topology.n_hidden(),
                topology.n_outputs()
            ));
        }
    }
    out.push_str("roles ");
    for role in topology.roles() {
        out.push(match role {
            UnitRole::Input => 'I',
            UnitRole::Hidden => 'H',
            UnitRole::Output => 'O',
        });
    }
    out.push('\n');
    out.push_str(&format!("weights {}\n", topology.n_pairs()));
    for ((i, j), w) in topology.pairs().zip(&params.weights) {
        out.push_str(&format!("{i} {j} {w:.17e}\n"));
    }
    out.push_str(&format!("biases {}\n", topology.n_free()));
    let n_in = topology.n_inputs();
    for k in 0..topology.n_free() {
        out.push_str(&format!(
            "{} {:.17e} {:.17e}\n",
            n_in + k,
            params.bias_strengths[k],
            params.bias_angles[k]
        ));
    }
    out.push_str("end\n");
    out
}

/// Write a checkpoint file.
pub fn save(
    path: impl AsRef<Path>,
    topology: &NetworkTopology,
    params: &ModelParameters,
) -> Result<(), CheckpointError> {
    fs::write(path, to_string(topology, params))?;
    Ok(())
}

/// Read a checkpoint file.
pub fn load(path: impl AsRef<Path>) -> Result<(NetworkTopology, ModelParameters), CheckpointError> {
    let content = fs::read_to_string(path)?;
    parse(&content)
}

fn parse_finite(line: usize, token: &str, what: &str) -> Result<f64, CheckpointError> {
    let value: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("{what} is not a number: {token:?}")))?;
    if !value.is_finite() {
        return Err(parse_err(line, format!("{what} must be finite: {token:?}")));
    }
    Ok(value)
}

fn parse_count(line: usize, token: &str, what: &str) -> Result<usize, CheckpointError> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("{what} is not a count: {token:?}")))
}

/// Parse a checkpoint document.
pub fn parse(content: &str) -> Result<(NetworkTopology, ModelParameters), CheckpointError> {
    let mut lines = content.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));

    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty checkpoint"))?;
    if header.trim() != HEADER {
        return Err(parse_err(line, format!("unrecognized header {header:?}")));
    }

    // topology line
    let (line, topo_line) = lines
        .next()
        .ok_or_else(|| parse_err(line, "missing topology line"))?;
    let mut fields = topo_line.split_whitespace();
    if fields.next() != Some("topology") {
        return Err(parse_err(line, "expected `topology ...`"));
    }
    let kind = fields
        .next()
        .ok_or_else(|| parse_err(line, "missing topology kind"))?;
    let kv = |expected: &'static str, field: Option<&str>| -> Result<String, CheckpointError> {
        let field = field.ok_or_else(|| parse_err(line, format!("missing {expected}=...")))?;
        field
            .strip_prefix(expected)
            .and_then(|rest| rest.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| parse_err(line, format!("expected {expected}=..., found {field:?}")))
    };
    let topology = match kind {
        "all-to-all" => {
            let units = parse_count(line, &kv("units", fields.next())?, "units")?;
            let inputs = parse_count(line, &kv("inputs", fields.next())?, "inputs")?;
            let hidden = parse_count(line, &kv("hidden", fields.next())?, "hidden")?;
            let outputs = parse_count(line, &kv("outputs", fields.next())?, "outputs")?;
            if units > MAX_UNITS {
                return Err(parse_err(line, format!("unit count {units} above {MAX_UNITS}")));
            }
            if inputs.checked_add(hidden).and_then(|s| s.checked_add(outputs)) != Some(units) {
                return Err(parse_err(line, "unit counts do not add up"));
            }
            NetworkTopology::all_to_all(inputs, hidden, outputs)
                .map_err(|e| parse_err(line, e.to_string()))?
        }
        "layered" => {
            let layers_spec = kv("layers", fields.next())?;
            let sizes: Result<Vec<usize>, _> = layers_spec
                .split(',')
                .map(|s| parse_count(line, s, "layer size"))
                .collect();
            let sizes = sizes?;
            let total = sizes.iter().try_fold(0usize, |acc, &s| acc.checked_add(s));
            if total.is_none_or(|t| t > MAX_UNITS) {
                return Err(parse_err(line, format!("unit count above {MAX_UNITS}")));
            }
            NetworkTopology::layered(&sizes).map_err(|e| parse_err(line, e.to_string()))?
        }
        other => return Err(parse_err(line, format!("unknown topology kind {other:?}"))),
    };
    if fields.next().is_some() {
        return Err(parse_err(line, "trailing fields on topology line"));
    }

    // roles line
    let (line, roles_line) = lines
        .next()
        .ok_or_else(|| parse_err(line, "missing roles line"))?;
    let roles_str = roles_line
        .strip_prefix("roles ")
        .ok_or_else(|| parse_err(line, "expected `roles ...`"))?;
    if roles_str.len() != topology.n_units() {
        return Err(parse_err(
            line,
            format!(
                "roles line has {} entries for {} units",
                roles_str.len(),
                topology.n_units()
            ),
        ));
    }
    for (unit, (c, role)) in roles_str.chars().zip(topology.roles()).enumerate() {
        let expected = match role {
            UnitRole::Input => 'I',
            UnitRole::Hidden => 'H',
            UnitRole::Output => 'O',
        };
        if c != expected {
            return Err(CheckpointError::Validation(format!(
                "role of unit {unit} is {c:?}, topology implies {expected:?}"
            )));
        }
    }

    // weights block
    let (line, weights_line) = lines
        .next()
        .ok_or_else(|| parse_err(line, "missing weights line"))?;
    let count_str = weights_line
        .strip_prefix("weights ")
        .ok_or_else(|| parse_err(line, "expected `weights <count>`"))?;
    let n_weights = parse_count(line, count_str.trim(), "weight count")?;
    if n_weights != topology.n_pairs() {
        return Err(CheckpointError::Validation(format!(
            "{} weights declared, topology has {} coupled pairs",
            n_weights,
            topology.n_pairs()
        )));
    }
    let mut params = ModelParameters::zeros(&topology);
    let mut weight_seen = vec![false; topology.n_pairs()];
    for _ in 0..n_weights {
        let (line, row) = lines
            .next()
            .ok_or_else(|| parse_err(line, "truncated weights block"))?;
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line, "weight rows are `<i> <j> <value>`"));
        }
        let i = parse_count(line, fields[0], "unit index")?;
        let j = parse_count(line, fields[1], "unit index")?;
        if i >= j {
            return Err(parse_err(line, format!("weight pair needs i < j, got {i} {j}")));
        }
        if j >= topology.n_units() {
            return Err(parse_err(line, format!("unit index {j} out of range")));
        }
        let k = topology.pair_index(i, j).ok_or_else(|| {
            CheckpointError::Validation(format!("pair {{{i}, {j}}} is not coupled"))
        })?;
        if weight_seen[k] {
            return Err(CheckpointError::Validation(format!(
                "duplicate weight for pair {{{i}, {j}}}"
            )));
        }
        weight_seen[k] = true;
        params.weights[k] = parse_finite(line, fields[2], "weight")?;
    }

    // biases block
    let (line, biases_line) = lines
        .next()
        .ok_or_else(|| parse_err(line, "missing biases line"))?;
    let count_str = biases_line
        .strip_prefix("biases ")
        .ok_or_else(|| parse_err(line, "expected `biases <count>`"))?;
    let n_biases = parse_count(line, count_str.trim(), "bias count")?;
    if n_biases != topology.n_free() {
        return Err(CheckpointError::Validation(format!(
            "{} bias rows declared, topology has {} non-input units",
            n_biases,
            topology.n_free()
        )));
    }
    let mut bias_seen = vec![false; topology.n_free()];
    for _ in 0..n_biases {
        let (line, row) = lines
            .next()
            .ok_or_else(|| parse_err(line, "truncated biases block"))?;
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line, "bias rows are `<unit> <h> <psi>`"));
        }
        let unit = parse_count(line, fields[0], "unit index")?;
        if unit < topology.n_inputs() || unit >= topology.n_units() {
            return Err(parse_err(
                line,
                format!("unit {unit} carries no bias parameters"),
            ));
        }
        let k = unit - topology.n_inputs();
        if bias_seen[k] {
            return Err(CheckpointError::Validation(format!(
                "duplicate bias row for unit {unit}"
            )));
        }
        bias_seen[k] = true;
        params.bias_strengths[k] = parse_finite(line, fields[1], "bias strength")?;
        params.bias_angles[k] = parse_finite(line, fields[2], "bias angle")?;
    }

    let (line, end) = lines
        .next()
        .ok_or_else(|| parse_err(line, "missing `end` line"))?;
    if end.trim() != "end" {
        return Err(parse_err(line, format!("expected `end`, found {end:?}")));
    }
    if let Some((line, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(line, format!("trailing content {extra:?}")));
    }

    Ok((topology, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::{init_parameters, InitScheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_instance(layered: bool) -> (NetworkTopology, ModelParameters) {
        let topo = if layered {
            NetworkTopology::layered(&[3, 4, 2]).unwrap()
        } else {
            NetworkTopology::all_to_all(2, 3, 2).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let params = init_parameters(&topo, InitScheme::Xor, &mut rng);
        (topo, params)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for layered in [false, true] {
            let (topo, params) = random_instance(layered);
            let text = to_string(&topo, &params);
            let (topo2, params2) = parse(&text).unwrap();
            assert_eq!(topo, topo2);
            for (a, b) in params.weights.iter().zip(&params2.weights) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            for (a, b) in params.bias_strengths.iter().zip(&params2.bias_strengths) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            for (a, b) in params.bias_angles.iter().zip(&params2.bias_angles) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let (topo, params) = random_instance(true);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save(&path, &topo, &params).unwrap();
        let (topo2, params2) = load(&path).unwrap();
        assert_eq!(topo, topo2);
        assert_eq!(params, params2);
    }

    #[test]
    fn awkward_values_round_trip() {
        let topo = NetworkTopology::all_to_all(1, 0, 1).unwrap();
        let mut params = ModelParameters::zeros(&topo);
        params.weights[0] = f64::MIN_POSITIVE;
        params.bias_strengths[0] = -0.0;
        params.bias_angles[0] = std::f64::consts::PI;
        let (_, parsed) = parse(&to_string(&topo, &params)).unwrap();
        assert_eq!(parsed.weights[0].to_bits(), f64::MIN_POSITIVE.to_bits());
        assert_eq!(parsed.bias_strengths[0].to_bits(), (-0.0f64).to_bits());
        assert_eq!(
            parsed.bias_angles[0].to_bits(),
            std::f64::consts::PI.to_bits()
        );
    }

    #[test]
    fn parse_rejects_malformed_documents() {
        let (topo, params) = random_instance(false);
        let good = to_string(&topo, &params);

        assert!(parse("").is_err());
        assert!(parse("garbage\n").is_err());

        // truncation anywhere must error, never panic
        for cut in [1, 2, 3, 5, good.lines().count() - 1] {
            let truncated: String = good
                .lines()
                .take(cut)
                .map(|l| format!("{l}\n"))
                .collect();
            assert!(parse(&truncated).is_err(), "cut at {cut} lines");
        }

        // duplicate weight row
        let mut lines: Vec<String> = good.lines().map(str::to_string).collect();
        let first_weight = lines[4].clone();
        lines[5] = first_weight;
        assert!(parse(&lines.join("\n")).is_err());

        // non-finite value
        let bad = good.replacen(
            &format!("{:.17e}", params.weights[0]),
            "inf",
            1,
        );
        assert!(parse(&bad).is_err());

        // role mismatch
        let bad_roles = good.replacen("roles I", "roles O", 1);
        assert!(parse(&bad_roles).is_err());
    }
}
