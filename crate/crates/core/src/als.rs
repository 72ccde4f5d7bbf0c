//! CP decomposition by alternating least squares.
//!
//! Each sweep solves the three normal equations in the order A, B, C, every
//! solve using the most recently updated factors:
//!
//! ```text
//! A ← X_(1) (C ⊙ B) (CᵀC ∗ BᵀB)⁺
//! B ← X_(2) (C ⊙ A) (CᵀC ∗ AᵀA)⁺
//! C ← X_(3) (B ⊙ A) (BᵀB ∗ AᵀA)⁺
//! ```
//!
//! After a sweep the columns of all three factors are normalized to unit
//! length and the product of the norms is kept as the component scale.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{load_matrix, save_matrix};
use crate::matrix::{solve_spd_right, Mat};
use crate::tensor::{self, mttkrp, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    RandomUniform,
    RandomNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlsConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// Stop when the absolute change in fit drops below this.
    pub tol: f64,
    pub seed: u64,
    pub init: InitKind,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            rank: 128,
            max_iters: 100,
            tol: 1e-6,
            seed: 0,
            init: InitKind::RandomUniform,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        Ok(())
    }
}

/// Factors `A (I×d)`, `B (J×d)`, `C (L×d)` and per-component scales; the
/// model value is `Σ_r scale_r · A(i,r) B(j,r) C(l,r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    a: Mat,
    b: Mat,
    c: Mat,
    scales: Vec<f64>,
    pub fit_history: Vec<f64>,
    pub converged: bool,
}

impl FactorModel {
    pub fn from_factors(a: Mat, b: Mat, c: Mat, scales: Vec<f64>) -> Result<Self> {
        let d = scales.len();
        if a.cols() != d || b.cols() != d || c.cols() != d {
            return Err(Error::shape(format!(
                "factor column counts ({}, {}, {}) differ from {d} scales",
                a.cols(),
                b.cols(),
                c.cols()
            )));
        }
        if !(a.all_finite()
            && b.all_finite()
            && c.all_finite()
            && scales.iter().all(|s| s.is_finite()))
        {
            return Err(Error::Numerical(
                "factor model has non-finite entries".into(),
            ));
        }
        Ok(FactorModel {
            a,
            b,
            c,
            scales,
            fit_history: Vec::new(),
            converged: false,
        })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn rank(&self) -> usize {
        self.scales.len()
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.a.rows(), self.b.rows(), self.c.rows()]
    }

    pub fn iterations(&self) -> usize {
        self.fit_history.len()
    }

    pub fn final_fit(&self) -> Option<f64> {
        self.fit_history.last().copied()
    }

    /// Rescales every column of A, B and C to unit norm, moving the norms
    /// into the scales. Zero columns leave a zero scale.
    pub fn normalized(&self) -> FactorModel {
        let mut m = self.clone();
        for r in 0..m.rank() {
            let na = m.a.column_norm(r);
            let nb = m.b.column_norm(r);
            let nc = m.c.column_norm(r);
            if na == 0.0 || nb == 0.0 || nc == 0.0 {
                m.scales[r] = 0.0;
                continue;
            }
            m.a.scale_column(r, 1.0 / na);
            m.b.scale_column(r, 1.0 / nb);
            m.c.scale_column(r, 1.0 / nc);
            m.scales[r] *= na * nb * nc;
        }
        m
    }

    /// Keeps only the listed components.
    pub fn select_components(&self, keep: &[usize]) -> FactorModel {
        FactorModel {
            a: self.a.select_columns(keep),
            b: self.b.select_columns(keep),
            c: self.c.select_columns(keep),
            scales: keep.iter().map(|&r| self.scales[r]).collect(),
            fit_history: self.fit_history.clone(),
            converged: self.converged,
        }
    }

    /// C with the scales multiplied into its columns.
    fn scaled_c(&self) -> Mat {
        let mut c = self.c.clone();
        for (r, &s) in self.scales.iter().enumerate() {
            c.scale_column(r, s);
        }
        c
    }
}

/// Random factors of the configured distribution; deterministic per seed.
/// Entries are drawn A first, then B, then C, each row-major.
pub fn init_factors(dims: [usize; 3], config: &AlsConfig) -> Result<FactorModel> {
    if config.rank == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    let d = config.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |rows: usize| {
        Mat::from_fn(rows, d, |_, _| match config.init {
            InitKind::RandomUniform => rng.gen::<f64>(),
            InitKind::RandomNormal => rng.sample(StandardNormal),
        })
    };
    let a = draw(dims[0]);
    let b = draw(dims[1]);
    let c = draw(dims[2]);
    FactorModel::from_factors(a, b, c, vec![1.0; d])
}

/// One Gauss–Seidel sweep over A, B, C. History fields are carried over
/// unchanged.
pub fn als_step(x: &Tensor3, model: &FactorModel) -> Result<FactorModel> {
    let [i, j, l] = x.dims();
    if model.dims() != [i, j, l] {
        return Err(Error::shape(format!(
            "model dims {:?} do not match tensor {:?}",
            model.dims(),
            x.dims()
        )));
    }
    let b = model.b.clone();
    let c = model.scaled_c();
    let (gb, gc) = (b.gram(), c.gram());

    let a = solve_spd_right(&mttkrp(x, &b, &c, 0)?, &gc.hadamard(&gb)?)?;
    let ga = a.gram();
    let b = solve_spd_right(&mttkrp(x, &a, &c, 1)?, &gc.hadamard(&ga)?)?;
    let gb = b.gram();
    let c = solve_spd_right(&mttkrp(x, &a, &b, 2)?, &gb.hadamard(&ga)?)?;

    let mut next = FactorModel::from_factors(a, b, c, vec![1.0; model.rank()])?.normalized();
    next.fit_history = model.fit_history.clone();
    next.converged = model.converged;
    Ok(next)
}

/// Runs ALS sweeps until the fit changes by less than `tol` or `max_iters`
/// is reached. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn decompose(x: &Tensor3, config: &AlsConfig) -> Result<FactorModel> {
    config.validate()?;
    if x.nnz() == 0 {
        return Err(Error::invalid("cannot decompose an all-zero tensor"));
    }
    let init = init_factors(x.dims(), config)?;
    decompose_from(x, init, config)
}

/// [`decompose`] starting from a given model instead of a random one.
pub fn decompose_from(x: &Tensor3, init: FactorModel, config: &AlsConfig) -> Result<FactorModel> {
    config.validate()?;
    let mut prev = tensor::fit(x, &init)?;
    let mut model = init;
    model.fit_history.clear();
    model.converged = false;
    for it in 0..config.max_iters {
        model = als_step(x, &model)?;
        let f = tensor::fit(x, &model)?;
        if !f.is_finite() {
            return Err(Error::Numerical(format!(
                "fit became non-finite at iteration {}",
                it + 1
            )));
        }
        model.fit_history.push(f);
        log::debug!("als iteration {}: fit {f:.10}", it + 1);
        if (f - prev).abs() < config.tol {
            model.converged = true;
            break;
        }
        prev = f;
    }
    Ok(model)
}

#[derive(Serialize, Deserialize)]
struct ModelManifest {
    dims: [usize; 3],
    rank: usize,
    config: Option<AlsConfig>,
    fit_history: Vec<f64>,
    converged: bool,
    iterations: usize,
}

/// Writes `A.txt`, `B.txt`, `C.txt`, `scales.txt` and `manifest.json`.
pub fn save_model(model: &FactorModel, config: Option<&AlsConfig>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_matrix(&model.a, &dir.join("A.txt"))?;
    save_matrix(&model.b, &dir.join("B.txt"))?;
    save_matrix(&model.c, &dir.join("C.txt"))?;
    let scales = Mat::from_vec(1, model.rank(), model.scales.clone())?;
    save_matrix(&scales, &dir.join("scales.txt"))?;
    let manifest = ModelManifest {
        dims: model.dims(),
        rank: model.rank(),
        config: config.cloned(),
        fit_history: model.fit_history.clone(),
        converged: model.converged,
        iterations: model.iterations(),
    };
    let path = dir.join("manifest.json");
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn load_model(dir: &Path) -> Result<FactorModel> {
    let a = load_matrix(&dir.join("A.txt"))?;
    let b = load_matrix(&dir.join("B.txt"))?;
    let c = load_matrix(&dir.join("C.txt"))?;
    let scales = load_matrix(&dir.join("scales.txt"))?;
    if scales.rows() != 1 {
        return Err(Error::shape("scales file must hold a single row"));
    }
    let mut model = FactorModel::from_factors(a, b, c, scales.into_vec())?;
    let path = dir.join("manifest.json");
    if path.exists() {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: ModelManifest = serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        if m.dims != model.dims() || m.rank != model.rank() {
            return Err(Error::shape(format!(
                "{}: manifest shape disagrees with factor files",
                path.display()
            )));
        }
        model.fit_history = m.fit_history;
        model.converged = m.converged;
    }
    Ok(model)
}

/// Reads the ALS configuration stored alongside a saved model, if any.
pub fn load_model_config(dir: &Path) -> Result<Option<AlsConfig>> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: ModelManifest = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Ok(m.config)
}
