//! Plain-text model files.
//!
//! ```text
//! swarm-deepsets-model v1
//! gamma_phi = 8
//! gamma_rho = 8
//! seed = 7
//! provenance = 3f2a...
//! phi = 6,25,40,40,40
//! rho = 40,40,40,40,1
//! ---
//! phi,0,W,<row-major weights>
//! phi,0,b,<bias>
//! ...
//! ```
//!
//! Values are written in shortest round-trip exponent form, so reading a
//! file back reproduces every weight bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::deepsets::{DeepSetsModel, ModelMeta};
use super::mlp::{Dense, Mlp};
use super::NetError;

const MAGIC: &str = "swarm-deepsets-model v1";

fn join_dims(net: &Mlp) -> String {
    net.dims().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

fn write_values(out: &mut String, prefix: &str, values: &[f64]) {
    out.push_str(prefix);
    for v in values {
        let _ = write!(out, ",{v:e}");
    }
    out.push('\n');
}

pub fn model_to_string(model: &DeepSetsModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "gamma_phi = {:e}", model.gamma_phi);
    let _ = writeln!(out, "gamma_rho = {:e}", model.gamma_rho);
    let _ = writeln!(out, "seed = {}", model.meta.seed);
    let _ = writeln!(out, "provenance = {}", model.meta.provenance);
    let _ = writeln!(out, "phi = {}", join_dims(&model.phi));
    let _ = writeln!(out, "rho = {}", join_dims(&model.rho));
    out.push_str("---\n");
    for (name, net) in [("phi", &model.phi), ("rho", &model.rho)] {
        for (i, layer) in net.layers.iter().enumerate() {
            write_values(&mut out, &format!("{name},{i},W"), &layer.weights);
            write_values(&mut out, &format!("{name},{i},b"), &layer.bias);
        }
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> NetError {
    NetError::Format { line, msg: msg.into() }
}

fn parse_dims(line: usize, s: &str) -> Result<Vec<usize>, NetError> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| parse_err(line, format!("bad width `{t}`: {e}"))))
        .collect()
}

fn empty_net(dims: &[usize]) -> Result<Mlp, NetError> {
    if dims.len() < 2 {
        return Err(NetError::Shape(format!("invalid widths {dims:?}")));
    }
    Mlp::from_layers(dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect())
}

pub fn model_from_str(text: &str) -> Result<DeepSetsModel, NetError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(parse_err(1, format!("missing `{MAGIC}` header"))),
    }
    let (mut gamma_phi, mut gamma_rho, mut seed, mut provenance) = (None, None, None, None);
    let (mut phi_dims, mut rho_dims) = (None, None);
    for (i, line) in lines.by_ref() {
        let n = i + 1;
        if line.trim() == "---" {
            break;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(n, "expected `key = value`"))?;
        let value = value.trim();
        let float = |v: &str| v.parse::<f64>().map_err(|e| parse_err(n, format!("bad number `{v}`: {e}")));
        match key.trim() {
            "gamma_phi" => gamma_phi = Some(float(value)?),
            "gamma_rho" => gamma_rho = Some(float(value)?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|e| parse_err(n, e.to_string()))?),
            "provenance" => provenance = Some(value.to_string()),
            "phi" => phi_dims = Some(parse_dims(n, value)?),
            "rho" => rho_dims = Some(parse_dims(n, value)?),
            other => return Err(parse_err(n, format!("unknown header key `{other}`"))),
        }
    }
    let missing = |k: &str| parse_err(0, format!("header is missing `{k}`"));
    let mut phi = empty_net(&phi_dims.ok_or_else(|| missing("phi"))?)?;
    let mut rho = empty_net(&rho_dims.ok_or_else(|| missing("rho"))?)?;
    let mut seen = 0usize;
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let net = match fields.next() {
            Some("phi") => &mut phi,
            Some("rho") => &mut rho,
            other => return Err(parse_err(n, format!("unknown network {other:?}"))),
        };
        let idx: usize = fields
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(n, "bad layer index"))?;
        let layer = net
            .layers
            .get_mut(idx)
            .ok_or_else(|| parse_err(n, format!("layer {idx} out of range")))?;
        let target = match fields.next() {
            Some("W") => &mut layer.weights,
            Some("b") => &mut layer.bias,
            other => return Err(parse_err(n, format!("unknown tensor {other:?}"))),
        };
        let values: Vec<f64> = fields
            .map(|t| t.parse::<f64>().map_err(|e| parse_err(n, format!("bad value `{t}`: {e}"))))
            .collect::<Result<_, _>>()?;
        if values.len() != target.len() {
            return Err(parse_err(n, format!("expected {} values, found {}", target.len(), values.len())));
        }
        *target = values;
        seen += 1;
    }
    let expected = 2 * (phi.layers.len() + rho.layers.len());
    if seen != expected {
        return Err(parse_err(0, format!("expected {expected} tensors, found {seen}")));
    }
    let mut model = DeepSetsModel::new(
        phi,
        rho,
        gamma_phi.ok_or_else(|| missing("gamma_phi"))?,
        gamma_rho.ok_or_else(|| missing("gamma_rho"))?,
    )?;
    model.meta = ModelMeta {
        seed: seed.ok_or_else(|| missing("seed"))?,
        provenance: provenance.unwrap_or_default(),
    };
    Ok(model)
}

pub fn save_model(model: &DeepSetsModel, path: &Path) -> Result<(), NetError> {
    std::fs::write(path, model_to_string(model)).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<DeepSetsModel, NetError> {
    let text = std::fs::read_to_string(path).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))?;
    model_from_str(&text)
}
