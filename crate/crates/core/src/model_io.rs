//! Versioned binary model files.
//!
//! Layout: an ASCII header followed by the payload.
//!
//! ```text
//! CMLLMDL 1
//! meta <key> <value>          (zero or more)
//! field <name> <rows> <cols>  (zero or more, payload order)
//! end
//! <rows*cols little-endian f64 per field, row-major, in declared order>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::data::Standardizer;
use crate::embedding::{
    CmllModel, CmllParams, EmbeddingKind, GammaSpec, IterationRecord, KcmllModel, KernelKind,
    KernelSpec,
};
use crate::error::{Error, Result};
use crate::learner::{Embedding, Pipeline, Regressor, RegressorKind};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const MAGIC: &str = "CMLLMDL";
pub const VERSION: &str = "1";

fn de(msg: impl Into<String>) -> Error {
    Error::Deserialize(msg.into())
}

/// Named matrices plus string metadata; the unit of serialization.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Envelope {
    pub meta: BTreeMap<String, String>,
    pub fields: Vec<(String, Matrix<f64>)>,
}

impl Envelope {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = format!("{MAGIC} {VERSION}\n");
        for (k, v) in &self.meta {
            let _ = writeln!(header, "meta {k} {v}");
        }
        for (name, m) in &self.fields {
            let _ = writeln!(header, "field {name} {} {}", m.rows(), m.cols());
        }
        header.push_str("end\n");
        let mut out = header.into_bytes();
        for (_, m) in &self.fields {
            for v in m.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut next_line = || -> Result<&str> {
            let rest = &bytes[pos..];
            let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| de("truncated header"))?;
            pos += nl + 1;
            std::str::from_utf8(&rest[..nl]).map_err(|_| de("header is not UTF-8"))
        };
        let first = next_line()?;
        let mut parts = first.split(' ');
        if parts.next() != Some(MAGIC) {
            return Err(de("missing CMLLMDL magic"));
        }
        let version = parts.next().unwrap_or("");
        if version != VERSION {
            return Err(Error::Version(version.to_string()));
        }
        let mut env = Envelope::default();
        let mut dims = Vec::new();
        loop {
            let line = next_line()?;
            let toks: Vec<&str> = line.split(' ').collect();
            match toks.as_slice() {
                ["end"] => break,
                ["meta", k, v] => {
                    env.meta.insert(k.to_string(), v.to_string());
                }
                ["field", name, r, c] => {
                    let r: usize = r.parse().map_err(|_| de(format!("bad row count in {line:?}")))?;
                    let c: usize = c.parse().map_err(|_| de(format!("bad column count in {line:?}")))?;
                    dims.push((name.to_string(), r, c));
                }
                _ => return Err(de(format!("unrecognized header line {line:?}"))),
            }
        }
        let payload = &bytes[pos..];
        let needed: usize = dims.iter().map(|(_, r, c)| r * c * 8).sum();
        if payload.len() < needed {
            return Err(de(format!(
                "truncated payload: header declares {} floats, found {}",
                needed / 8,
                payload.len() / 8
            )));
        }
        if payload.len() > needed {
            return Err(de(format!("{} trailing payload bytes", payload.len() - needed)));
        }
        let mut off = 0;
        for (name, r, c) in dims {
            let data: Vec<f64> = payload[off..off + r * c * 8]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect();
            off += r * c * 8;
            let m = Matrix::from_vec(r, c, data).map_err(|e| de(format!("field {name}: {e}")))?;
            env.fields.push((name, m));
        }
        Ok(env)
    }

    fn put_meta(&mut self, k: &str, v: impl ToString) {
        self.meta.insert(k.to_string(), v.to_string());
    }

    fn put<T: Scalar>(&mut self, name: &str, m: &Matrix<T>) {
        self.fields.push((name.to_string(), m.cast()));
    }

    fn put_vec<T: Scalar>(&mut self, name: &str, v: &[T]) {
        let m = Matrix::from_fn(1, v.len(), |_, j| v[j].as_f64());
        self.fields.push((name.to_string(), m));
    }

    fn put_scalar<T: Scalar>(&mut self, name: &str, v: T) {
        self.put_vec(name, &[v]);
    }

    fn meta(&self, k: &str) -> Result<&str> {
        self.meta.get(k).map(String::as_str).ok_or_else(|| de(format!("missing meta {k}")))
    }

    fn meta_parse<V: std::str::FromStr>(&self, k: &str) -> Result<V> {
        self.meta(k)?.parse().map_err(|_| de(format!("bad meta {k}")))
    }

    fn get<T: Scalar>(&self, name: &str) -> Result<Matrix<T>> {
        self.fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m.cast())
            .ok_or_else(|| de(format!("missing field {name}")))
    }

    fn get_vec<T: Scalar>(&self, name: &str) -> Result<Vec<T>> {
        let m: Matrix<T> = self.get(name)?;
        if m.rows() != 1 {
            return Err(de(format!("field {name} should be a row vector")));
        }
        Ok(m.into_vec())
    }

    fn get_scalar<T: Scalar>(&self, name: &str) -> Result<T> {
        let v = self.get_vec::<T>(name)?;
        match v.as_slice() {
            [x] => Ok(*x),
            _ => Err(de(format!("field {name} should be 1x1"))),
        }
    }
}

fn expect_shape<T>(name: &str, m: &Matrix<T>, rows: usize, cols: usize) -> Result<()>
where
    T: Scalar,
{
    if m.shape() != (rows, cols) {
        return Err(de(format!(
            "field {name} is {}x{}, expected {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn put_params<T: Scalar>(env: &mut Envelope, p: &CmllParams<T>) {
    env.put_meta("params.m", p.m);
    env.put_meta("params.d", p.d);
    env.put_meta("params.maxc", p.maxc);
    env.put_meta("params.seed", p.seed);
    env.put_scalar("params.beta", p.beta);
    env.put_scalar("params.lambda", p.lambda);
    env.put_scalar("params.tol", p.tol);
}

fn get_params<T: Scalar>(env: &Envelope) -> Result<CmllParams<T>> {
    Ok(CmllParams {
        beta: env.get_scalar("params.beta")?,
        lambda: env.get_scalar("params.lambda")?,
        m: env.meta_parse("params.m")?,
        d: env.meta_parse("params.d")?,
        maxc: env.meta_parse("params.maxc")?,
        tol: env.get_scalar("params.tol")?,
        seed: env.meta_parse("params.seed")?,
    })
}

fn put_trace<T: Scalar>(env: &mut Envelope, trace: &[IterationRecord<T>]) {
    let m = Matrix::from_fn(trace.len(), 2, |i, j| if j == 0 { trace[i].gamma } else { trace[i].delta });
    env.put("trace", &m);
}

fn get_trace<T: Scalar>(env: &Envelope) -> Result<Vec<IterationRecord<T>>> {
    let m: Matrix<T> = env.get("trace")?;
    if m.cols() != 2 {
        return Err(de("trace must have 2 columns"));
    }
    Ok((0..m.rows()).map(|i| IterationRecord { gamma: m[(i, 0)], delta: m[(i, 1)] }).collect())
}

fn put_kernel<T: Scalar>(env: &mut Envelope, prefix: &str, spec: &KernelSpec<T>) {
    let kind = match spec.kind {
        KernelKind::Linear => "linear",
        KernelKind::Rbf => "rbf",
    };
    env.put_meta(&format!("{prefix}.kernel"), kind);
    if let Some(g) = spec.gamma_value() {
        env.put_scalar(&format!("{prefix}.gamma"), g);
    }
}

fn get_kernel<T: Scalar>(env: &Envelope, prefix: &str) -> Result<KernelSpec<T>> {
    let kind = match env.meta(&format!("{prefix}.kernel"))? {
        "linear" => KernelKind::Linear,
        "rbf" => KernelKind::Rbf,
        other => return Err(de(format!("unknown kernel {other:?}"))),
    };
    let gamma = GammaSpec::Value(env.get_scalar(&format!("{prefix}.gamma"))?);
    Ok(KernelSpec { kind, gamma })
}

fn kind_from_str(s: &str) -> Result<EmbeddingKind> {
    match s {
        "cmll" => Ok(EmbeddingKind::Cmll),
        "cmll_y" => Ok(EmbeddingKind::CmllY),
        "mddm" => Ok(EmbeddingKind::Mddm),
        other => Err(de(format!("unknown embedding kind {other:?}"))),
    }
}

fn put_linear<T: Scalar>(env: &mut Envelope, m: &CmllModel<T>) {
    env.put_meta("embedding", m.kind.as_str());
    put_params(env, &m.params);
    env.put("embedding.P", &m.p);
    env.put("embedding.V", &m.v);
    env.put("embedding.W", &m.w);
    env.put_vec("embedding.feature_means", &m.feature_means);
    put_trace(env, &m.trace);
}

fn get_linear<T: Scalar>(env: &Envelope, kind: EmbeddingKind) -> Result<CmllModel<T>> {
    let params: CmllParams<T> = get_params(env)?;
    let p: Matrix<T> = env.get("embedding.P")?;
    let v: Matrix<T> = env.get("embedding.V")?;
    let w: Matrix<T> = env.get("embedding.W")?;
    let feature_means: Vec<T> = env.get_vec("embedding.feature_means")?;
    let d_feat = feature_means.len();
    expect_shape("embedding.P", &p, d_feat, p.cols())?;
    expect_shape("embedding.W", &w, v.cols(), w.cols())?;
    Ok(CmllModel { kind, p, v, w, feature_means, params, trace: get_trace(env)? })
}

fn put_kernel_model<T: Scalar>(env: &mut Envelope, m: &KcmllModel<T>) {
    env.put_meta("embedding", "kcmll");
    put_params(env, &m.params);
    put_kernel(env, "embedding", &m.spec);
    env.put("embedding.R", &m.r);
    env.put("embedding.V", &m.v);
    env.put("embedding.W", &m.w);
    env.put("embedding.X_train", &m.x_train);
    env.put_vec("embedding.kernel_means", &m.kernel_means);
    env.put_scalar("embedding.ridge", m.ridge);
    put_trace(env, &m.trace);
}

fn get_kernel_model<T: Scalar>(env: &Envelope) -> Result<KcmllModel<T>> {
    let r: Matrix<T> = env.get("embedding.R")?;
    let x_train: Matrix<T> = env.get("embedding.X_train")?;
    let v: Matrix<T> = env.get("embedding.V")?;
    let w: Matrix<T> = env.get("embedding.W")?;
    let kernel_means: Vec<T> = env.get_vec("embedding.kernel_means")?;
    let n = x_train.rows();
    expect_shape("embedding.R", &r, n, r.cols())?;
    if kernel_means.len() != n {
        return Err(de("embedding.kernel_means length differs from training rows"));
    }
    expect_shape("embedding.W", &w, v.cols(), w.cols())?;
    Ok(KcmllModel {
        r,
        v,
        w,
        x_train,
        kernel_means,
        spec: get_kernel(env, "embedding")?,
        ridge: env.get_scalar("embedding.ridge")?,
        params: get_params(env)?,
        trace: get_trace(env)?,
    })
}

fn put_regressor<T: Scalar>(env: &mut Envelope, r: &Regressor<T>) {
    env.put_meta(
        "regressor",
        match r.kind {
            RegressorKind::Ridge => "ridge",
            RegressorKind::KernelRidge => "kridge",
        },
    );
    env.put("regressor.coef", &r.coef);
    env.put_vec("regressor.input_means", &r.input_means);
    env.put_vec("regressor.target_means", &r.target_means);
    env.put_scalar("regressor.rho", r.rho);
    if let (Some(spec), Some(u)) = (&r.spec, &r.u_train) {
        put_kernel(env, "regressor", spec);
        env.put("regressor.U_train", u);
        env.put_scalar("regressor.kernel_mean", r.kernel_mean);
    }
}

fn get_regressor<T: Scalar>(env: &Envelope) -> Result<Regressor<T>> {
    let coef: Matrix<T> = env.get("regressor.coef")?;
    let input_means: Vec<T> = env.get_vec("regressor.input_means")?;
    let target_means: Vec<T> = env.get_vec("regressor.target_means")?;
    let rho = env.get_scalar("regressor.rho")?;
    if target_means.len() != coef.cols() {
        return Err(de("regressor target means do not match coefficient columns"));
    }
    match env.meta("regressor")? {
        "ridge" => {
            if input_means.len() != coef.rows() {
                return Err(de("regressor input means do not match coefficient rows"));
            }
            Ok(Regressor {
                kind: RegressorKind::Ridge,
                coef,
                input_means,
                target_means,
                rho,
                spec: None,
                u_train: None,
                kernel_mean: T::zero(),
            })
        }
        "kridge" => {
            let u: Matrix<T> = env.get("regressor.U_train")?;
            if u.rows() != coef.rows() || input_means.len() != u.rows() {
                return Err(de("kernel ridge coefficient rows do not match training inputs"));
            }
            Ok(Regressor {
                kind: RegressorKind::KernelRidge,
                coef,
                input_means,
                target_means,
                rho,
                spec: Some(get_kernel(env, "regressor")?),
                u_train: Some(u),
                kernel_mean: env.get_scalar("regressor.kernel_mean")?,
            })
        }
        other => Err(de(format!("unknown regressor {other:?}"))),
    }
}

pub fn pipeline_to_envelope<T: Scalar>(pipe: &Pipeline<T>) -> Envelope {
    let mut env = Envelope::default();
    env.put_meta("format", "pipeline");
    env.put_scalar("delta", pipe.delta);
    match &pipe.scaler {
        Some(s) => {
            env.put_meta("standardize", "yes");
            env.put_vec("scaler.means", &s.means);
            env.put_vec("scaler.scales", &s.scales);
        }
        None => env.put_meta("standardize", "no"),
    }
    match &pipe.embedding {
        Embedding::None => env.put_meta("embedding", "none"),
        Embedding::Linear(m) => put_linear(&mut env, m),
        Embedding::Kernel(m) => put_kernel_model(&mut env, m),
    }
    put_regressor(&mut env, &pipe.regressor);
    env
}

pub fn pipeline_from_envelope<T: Scalar>(env: &Envelope) -> Result<Pipeline<T>> {
    if env.meta("format")? != "pipeline" {
        return Err(de("not a pipeline model file"));
    }
    let scaler = match env.meta("standardize")? {
        "yes" => {
            let means: Vec<T> = env.get_vec("scaler.means")?;
            let scales: Vec<T> = env.get_vec("scaler.scales")?;
            if means.len() != scales.len() {
                return Err(de("scaler vectors differ in length"));
            }
            Some(Standardizer { means, scales })
        }
        "no" => None,
        other => return Err(de(format!("bad standardize flag {other:?}"))),
    };
    let embedding = match env.meta("embedding")? {
        "none" => Embedding::None,
        "kcmll" => Embedding::Kernel(get_kernel_model(env)?),
        other => Embedding::Linear(get_linear(env, kind_from_str(other)?)?),
    };
    let regressor = get_regressor(env)?;
    let embedded_dim = match &embedding {
        Embedding::None => None,
        Embedding::Linear(m) => Some(m.p.cols()),
        Embedding::Kernel(m) => Some(m.r.cols()),
    };
    if let Some(d) = embedded_dim {
        if regressor.input_dim() != d {
            return Err(de(format!(
                "regressor expects {} inputs but embedding produces {d}",
                regressor.input_dim()
            )));
        }
    }
    Ok(Pipeline { scaler, embedding, regressor, delta: env.get_scalar("delta")? })
}

/// Serializes a fitted pipeline.
pub fn save_model<T: Scalar>(pipe: &Pipeline<T>) -> Vec<u8> {
    pipeline_to_envelope(pipe).to_bytes()
}

pub fn load_model<T: Scalar>(bytes: &[u8]) -> Result<Pipeline<T>> {
    pipeline_from_envelope(&Envelope::from_bytes(bytes)?)
}
