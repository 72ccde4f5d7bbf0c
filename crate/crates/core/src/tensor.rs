//! Sparse three-mode tensor of stacked `V × V` views and the contractions
//! CP-ALS needs.

use rayon::prelude::*;

use crate::als::FactorModel;
use crate::error::{Error, Result};
use crate::io::Graph;
use crate::knn::KnnView;
use crate::matrix::Mat;

/// One stored nonzero `X(i, j, l) = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub value: f64,
}

/// Coordinate-format sparse tensor of shape `I × J × L`.
///
/// Entries are stored view by view (sorted by `(l, i, j)`); for each mode a
/// permutation groups the entries by their index along that mode so that
/// MTTKRP rows can be accumulated independently and in a fixed order.
#[derive(Debug, Clone)]
pub struct Tensor3 {
    dims: [usize; 3],
    entries: Vec<Entry>,
    /// Per mode: offsets into `order[mode]`, one range per index of that mode.
    row_ptr: [Vec<usize>; 3],
    order: [Vec<usize>; 3],
    norm: f64,
}

impl Tensor3 {
    /// Duplicate coordinates are summed; explicit zeros are dropped.
    pub fn from_entries(
        dims: [usize; 3],
        entries: impl IntoIterator<Item = Entry>,
    ) -> Result<Self> {
        if dims[2] == 0 {
            return Err(Error::invalid("tensor needs at least one view"));
        }
        let mut entries: Vec<Entry> = entries.into_iter().collect();
        for e in &entries {
            if e.i >= dims[0] || e.j >= dims[1] || e.l >= dims[2] {
                return Err(Error::shape(format!(
                    "entry ({}, {}, {}) outside {}x{}x{}",
                    e.i, e.j, e.l, dims[0], dims[1], dims[2]
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::invalid("tensor entries must be finite"));
            }
        }
        entries.sort_by_key(|e| (e.l, e.i, e.j));
        let mut merged: Vec<Entry> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if (last.l, last.i, last.j) == (e.l, e.i, e.j) => last.value += e.value,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);

        let index = |e: &Entry, m: usize| match m {
            0 => e.i,
            1 => e.j,
            _ => e.l,
        };
        let mut row_ptr: [Vec<usize>; 3] = Default::default();
        let mut order: [Vec<usize>; 3] = Default::default();
        for m in 0..3 {
            let mut counts = vec![0usize; dims[m] + 1];
            for e in &merged {
                counts[index(e, m) + 1] += 1;
            }
            for k in 1..counts.len() {
                counts[k] += counts[k - 1];
            }
            let mut fill = counts.clone();
            let mut ord = vec![0; merged.len()];
            // stable: entries keep their (l, i, j) order within a row
            for (p, e) in merged.iter().enumerate() {
                let r = index(e, m);
                ord[fill[r]] = p;
                fill[r] += 1;
            }
            row_ptr[m] = counts;
            order[m] = ord;
        }
        let norm = merged.iter().map(|e| e.value * e.value).sum::<f64>().sqrt();
        Ok(Tensor3 {
            dims,
            entries: merged,
            row_ptr,
            order,
            norm,
        })
    }

    /// Builds a `V × V × L` tensor from per-view lists of `(row, col, value)`.
    pub fn from_views(num_nodes: usize, views: &[Vec<(usize, usize, f64)>]) -> Result<Self> {
        let entries = views
            .iter()
            .enumerate()
            .flat_map(|(l, v)| v.iter().map(move |&(i, j, value)| Entry { i, j, l, value }));
        Tensor3::from_entries([num_nodes, num_nodes, views.len()], entries)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_views(&self) -> usize {
        self.dims[2]
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Number of stored entries in one view.
    pub fn view_nnz(&self, l: usize) -> usize {
        self.row_ptr[2][l + 1] - self.row_ptr[2][l]
    }

    pub fn view_entries(&self, l: usize) -> impl Iterator<Item = &Entry> + '_ {
        self.order[2][self.row_ptr[2][l]..self.row_ptr[2][l + 1]]
            .iter()
            .map(move |&p| &self.entries[p])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm
    }

    /// Dense copy of one view.
    pub fn view_dense(&self, l: usize) -> Result<Mat> {
        if l >= self.dims[2] {
            return Err(Error::invalid(format!("view {l} out of range")));
        }
        let mut m = Mat::zeros(self.dims[0], self.dims[1]);
        for e in self.view_entries(l) {
            m[(e.i, e.j)] = e.value;
        }
        Ok(m)
    }
}

/// Stacks the adjacency view (slice 0) and the K-NN view (slice 1).
pub fn stack_views(adj: &Graph, knn: &KnnView) -> Result<Tensor3> {
    if adj.num_nodes() != knn.num_nodes() {
        return Err(Error::shape(format!(
            "adjacency has {} nodes, K-NN view has {}",
            adj.num_nodes(),
            knn.num_nodes()
        )));
    }
    let y = adj.adjacency_entries().map(|(i, j)| (i, j, 1.0)).collect();
    let z = knn.pairs().map(|(i, j)| (i, j, 1.0)).collect();
    Tensor3::from_views(adj.num_nodes(), &[y, z])
}

/// Single-view tensor holding only the adjacency matrix.
pub fn adjacency_only(adj: &Graph) -> Result<Tensor3> {
    let y = adj.adjacency_entries().map(|(i, j)| (i, j, 1.0)).collect();
    Tensor3::from_views(adj.num_nodes(), &[y])
}

/// Matricized tensor times Khatri–Rao product, `X_(mode) · (f2 ⊙ f1)`.
///
/// `f1` and `f2` are the factors of the two remaining modes in increasing
/// mode order. Row `r` of the result only reads the entries whose `mode`
/// index is `r`, always in the same order, so the output does not depend
/// on the thread count.
pub fn mttkrp(x: &Tensor3, f1: &Mat, f2: &Mat, mode: usize) -> Result<Mat> {
    if mode > 2 {
        return Err(Error::invalid(format!("mode {mode} out of range")));
    }
    let (m1, m2) = match mode {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let d = f1.cols();
    if f2.cols() != d {
        return Err(Error::shape("factor matrices differ in column count"));
    }
    if f1.rows() != x.dims[m1] || f2.rows() != x.dims[m2] {
        return Err(Error::shape(format!(
            "factors {}x{d} and {}x{d} do not match tensor {:?} for mode {mode}",
            f1.rows(),
            f2.rows(),
            x.dims
        )));
    }
    let mut out = Mat::zeros(x.dims[mode], d);
    if d == 0 {
        return Ok(out);
    }
    let ptr = &x.row_ptr[mode];
    let ord = &x.order[mode];
    out.as_mut_slice()
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(r, acc)| {
            for &p in &ord[ptr[r]..ptr[r + 1]] {
                let e = &x.entries[p];
                let (k1, k2) = match mode {
                    0 => (e.j, e.l),
                    1 => (e.i, e.l),
                    _ => (e.i, e.j),
                };
                let (a, b) = (f1.row(k1), f2.row(k2));
                for c in 0..d {
                    acc[c] += e.value * a[c] * b[c];
                }
            }
        });
    Ok(out)
}

/// Dense `I × J` reconstruction of one view:
/// `Σ_r scale_r · C(view, r) · A(:, r) · B(:, r)ᵀ`.
pub fn reconstruct_view(model: &FactorModel, view: usize) -> Result<Mat> {
    let (a, b, c) = (model.a(), model.b(), model.c());
    if view >= c.rows() {
        return Err(Error::invalid(format!(
            "view {view} out of range for a model with {} views",
            c.rows()
        )));
    }
    let d = model.rank();
    let w: Vec<f64> = (0..d).map(|r| model.scales()[r] * c[(view, r)]).collect();
    let mut out = Mat::zeros(a.rows(), b.rows());
    out.as_mut_slice()
        .par_chunks_mut(b.rows().max(1))
        .enumerate()
        .for_each(|(i, row)| {
            let ai = a.row(i);
            let aw: Vec<f64> = ai.iter().zip(&w).map(|(x, y)| x * y).collect();
            for (j, o) in row.iter_mut().enumerate() {
                *o = aw.iter().zip(b.row(j)).map(|(x, y)| x * y).sum();
            }
        });
    Ok(out)
}

/// Value of the CP model at one coordinate.
#[inline]
fn model_value(model: &FactorModel, i: usize, j: usize, l: usize) -> f64 {
    let (a, b, c, s) = (
        model.a().row(i),
        model.b().row(j),
        model.c().row(l),
        model.scales(),
    );
    (0..s.len()).map(|r| s[r] * a[r] * b[r] * c[r]).sum()
}

/// Largest dense size for which a near-exact fit is re-derived entry by entry.
const EXACT_RESIDUAL_LIMIT: usize = 1 << 22;

/// `‖X − X̂‖_F` via `‖X‖² − 2⟨X, X̂⟩ + ‖X̂‖²`, without forming `X̂`.
pub fn residual_norm(x: &Tensor3, model: &FactorModel) -> Result<f64> {
    check_model_shape(x, model)?;
    let d = model.rank();
    let s = model.scales();
    let inner: f64 = x
        .entries
        .iter()
        .map(|e| e.value * model_value(model, e.i, e.j, e.l))
        .sum();
    let ga = model.a().gram();
    let gb = model.b().gram();
    let gc = model.c().gram();
    let mut model_sq = 0.0;
    for p in 0..d {
        for q in 0..d {
            model_sq += s[p] * s[q] * ga[(p, q)] * gb[(p, q)] * gc[(p, q)];
        }
    }
    let x_sq = x.norm * x.norm;
    let res_sq = x_sq - 2.0 * inner + model_sq;
    let scale = x_sq.max(model_sq);
    // The expansion loses about half the digits when the residual is tiny
    // relative to ‖X‖; small tensors get an entrywise recomputation.
    let dense = x.dims[0] * x.dims[1] * x.dims[2];
    if res_sq <= 1e-10 * scale && dense <= EXACT_RESIDUAL_LIMIT {
        return Ok(exact_residual(x, model).sqrt());
    }
    Ok(res_sq.max(0.0).sqrt())
}

fn exact_residual(x: &Tensor3, model: &FactorModel) -> f64 {
    let [ni, nj, nl] = x.dims;
    let mut dense = vec![0.0; ni * nj * nl];
    for e in &x.entries {
        dense[(e.l * ni + e.i) * nj + e.j] = e.value;
    }
    let mut sum = 0.0;
    for l in 0..nl {
        for i in 0..ni {
            for j in 0..nj {
                let r = dense[(l * ni + i) * nj + j] - model_value(model, i, j, l);
                sum += r * r;
            }
        }
    }
    sum
}

fn check_model_shape(x: &Tensor3, model: &FactorModel) -> Result<()> {
    let [i, j, l] = x.dims;
    if model.a().rows() != i || model.b().rows() != j || model.c().rows() != l {
        return Err(Error::shape(format!(
            "model ({}, {}, {}) does not match tensor {:?}",
            model.a().rows(),
            model.b().rows(),
            model.c().rows(),
            x.dims
        )));
    }
    Ok(())
}

/// `1 − ‖X − X̂‖ / ‖X‖`.
pub fn fit(x: &Tensor3, model: &FactorModel) -> Result<f64> {
    if x.norm == 0.0 {
        return Err(Error::invalid("fit is undefined for an all-zero tensor"));
    }
    Ok(1.0 - residual_norm(x, model)? / x.norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense X_(mode) times an explicitly built Khatri–Rao matrix, following
    /// the Kolda–Bader unfolding convention.
    pub(crate) fn naive_mttkrp(
        dense: &[Vec<Vec<f64>>],
        dims: [usize; 3],
        f1: &Mat,
        f2: &Mat,
        mode: usize,
    ) -> Mat {
        let (m1, m2) = match mode {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let d = f1.cols();
        // Khatri–Rao f2 ⊙ f1: row index k2 * n1 + k1
        let n1 = dims[m1];
        let n2 = dims[m2];
        let mut kr = vec![vec![0.0; d]; n1 * n2];
        for k2 in 0..n2 {
            for k1 in 0..n1 {
                for r in 0..d {
                    kr[k2 * n1 + k1][r] = f2[(k2, r)] * f1[(k1, r)];
                }
            }
        }
        // unfolding: X_(mode)[t, k2 * n1 + k1]
        let mut out = Mat::zeros(dims[mode], d);
        for t in 0..dims[mode] {
            for k2 in 0..n2 {
                for k1 in 0..n1 {
                    let mut idx = [0; 3];
                    idx[mode] = t;
                    idx[m1] = k1;
                    idx[m2] = k2;
                    let v = dense[idx[0]][idx[1]][idx[2]];
                    for r in 0..d {
                        out[(t, r)] += v * kr[k2 * n1 + k1][r];
                    }
                }
            }
        }
        out
    }

    fn random_sparse(
        rng: &mut ChaCha8Rng,
        dims: [usize; 3],
        p: f64,
    ) -> (Tensor3, Vec<Vec<Vec<f64>>>) {
        let mut dense = vec![vec![vec![0.0; dims[2]]; dims[1]]; dims[0]];
        let mut entries = Vec::new();
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for l in 0..dims[2] {
                    if rng.gen_bool(p) {
                        let v = rng.gen_range(-2.0..2.0);
                        dense[i][j][l] = v;
                        entries.push(Entry { i, j, l, value: v });
                    }
                }
            }
        }
        (Tensor3::from_entries(dims, entries).unwrap(), dense)
    }

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn stack_path_graph_with_empty_knn() {
        let (g, _) = Graph::from_pairs(3, [(0, 1), (1, 2)]).unwrap();
        let x = stack_views(&g, &KnnView::empty(3)).unwrap();
        assert_eq!(x.dims(), [3, 3, 2]);
        assert_eq!(x.nnz(), 4);
        assert_eq!(x.view_nnz(1), 0);
    }

    #[test]
    fn stack_shared_edge_in_both_slices() {
        let (g, _) = Graph::from_pairs(3, [(0, 1)]).unwrap();
        let z = KnnView::from_pairs(3, &[(0, 1), (2, 0)]).unwrap();
        let x = stack_views(&g, &z).unwrap();
        assert_eq!(x.nnz(), 2 + 2);
        assert_eq!(x.view_dense(0).unwrap()[(0, 1)], 1.0);
        assert_eq!(x.view_dense(1).unwrap()[(0, 1)], 1.0);
        assert_eq!(x.view_dense(1).unwrap()[(1, 0)], 0.0);
    }

    #[test]
    fn stack_size_mismatch() {
        let (g, _) = Graph::from_pairs(3, [(0, 1)]).unwrap();
        assert!(stack_views(&g, &KnnView::empty(4)).is_err());
    }

    #[test]
    fn mttkrp_zero_tensor() {
        let x = Tensor3::from_entries([3, 4, 2], []).unwrap();
        let m = mttkrp(&x, &Mat::zeros(4, 3), &Mat::zeros(2, 3), 0).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 3));
        assert!(m.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mttkrp_single_entry() {
        let x = Tensor3::from_entries(
            [2, 2, 2],
            [Entry {
                i: 0,
                j: 1,
                l: 1,
                value: 1.0,
            }],
        )
        .unwrap();
        let mut dense = vec![vec![vec![0.0; 2]; 2]; 2];
        dense[0][1][1] = 1.0;
        let id = Mat::identity(2);
        for mode in 0..3 {
            let got = mttkrp(&x, &id, &id, mode).unwrap();
            let want = naive_mttkrp(&dense, [2, 2, 2], &id, &id, mode);
            assert_eq!(got, want, "mode {mode}");
        }
        // mode 0 with identities: row 0 gets B(1,:) * C(1,:) = e1 * e1
        let got = mttkrp(&x, &id, &id, 0).unwrap();
        assert_eq!(got.as_slice(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn mttkrp_random_5x5x2() {
        let mut rng = ChaCha8Rng::seed_from_u64(552);
        let (x, dense) = random_sparse(&mut rng, [5, 5, 2], 0.3);
        let a = rand_mat(&mut rng, 5, 3);
        let b = rand_mat(&mut rng, 5, 3);
        let c = rand_mat(&mut rng, 2, 3);
        for (mode, f1, f2) in [(0, &b, &c), (1, &a, &c), (2, &a, &b)] {
            let got = mttkrp(&x, f1, f2, mode).unwrap();
            let want = naive_mttkrp(&dense, [5, 5, 2], f1, f2, mode);
            assert!(got.max_abs_diff(&want) <= 1e-10);
        }
    }

    #[test]
    fn mttkrp_shape_errors() {
        let x = Tensor3::from_entries([3, 4, 2], []).unwrap();
        assert!(mttkrp(&x, &Mat::zeros(3, 2), &Mat::zeros(2, 2), 0).is_err());
        assert!(mttkrp(&x, &Mat::zeros(4, 2), &Mat::zeros(2, 3), 0).is_err());
        assert!(mttkrp(&x, &Mat::zeros(4, 2), &Mat::zeros(2, 2), 3).is_err());
    }

    #[test]
    fn reconstruct_rank_one() {
        let a = Mat::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let c = Mat::from_rows(&[vec![2.0], vec![3.0]]).unwrap();
        let m = FactorModel::from_factors(a.clone(), a, c, vec![1.0]).unwrap();
        let r = reconstruct_view(&m, 0).unwrap();
        assert_eq!(r.as_slice(), &[2.0; 4]);
        let r = reconstruct_view(&m, 1).unwrap();
        assert_eq!(r.as_slice(), &[3.0; 4]);
        assert!(reconstruct_view(&m, 2).is_err());
    }

    #[test]
    fn reconstruct_zero_view_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = rand_mat(&mut rng, 4, 2);
        let b = rand_mat(&mut rng, 4, 2);
        let c = Mat::from_rows(&[vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let m = FactorModel::from_factors(a, b, c, vec![1.0, 1.0]).unwrap();
        assert!(reconstruct_view(&m, 0)
            .unwrap()
            .as_slice()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn fit_exact_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = rand_mat(&mut rng, 4, 2);
        let b = rand_mat(&mut rng, 5, 2);
        let c = rand_mat(&mut rng, 2, 2);
        let m = FactorModel::from_factors(a, b, c, vec![1.0, 0.5]).unwrap();
        let views: Vec<Mat> = (0..2).map(|l| reconstruct_view(&m, l).unwrap()).collect();
        let mut entries = Vec::new();
        for (l, v) in views.iter().enumerate() {
            for i in 0..4 {
                for j in 0..5 {
                    entries.push(Entry {
                        i,
                        j,
                        l,
                        value: v[(i, j)],
                    });
                }
            }
        }
        let x = Tensor3::from_entries([4, 5, 2], entries).unwrap();
        assert!((fit(&x, &m).unwrap() - 1.0).abs() < 1e-12);

        let zero = FactorModel::from_factors(
            Mat::zeros(4, 2),
            Mat::zeros(5, 2),
            Mat::zeros(2, 2),
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(fit(&x, &zero).unwrap(), 0.0);
    }

    #[test]
    fn fit_of_empty_tensor_is_error() {
        let x = Tensor3::from_entries([2, 2, 2], []).unwrap();
        let m = FactorModel::from_factors(
            Mat::zeros(2, 1),
            Mat::zeros(2, 1),
            Mat::zeros(2, 1),
            vec![1.0],
        )
        .unwrap();
        assert!(fit(&x, &m).is_err());
    }

    #[test]
    fn fit_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let (x, dense) = random_sparse(&mut rng, [6, 5, 3], 0.4);
            if x.nnz() == 0 {
                continue;
            }
            let a = rand_mat(&mut rng, 6, 3);
            let b = rand_mat(&mut rng, 5, 3);
            let c = rand_mat(&mut rng, 3, 3);
            let m = FactorModel::from_factors(a.clone(), b.clone(), c.clone(), vec![1.0, 2.0, 0.5])
                .unwrap();
            let mut res = 0.0;
            let mut xn = 0.0;
            for i in 0..6 {
                for j in 0..5 {
                    for l in 0..3 {
                        let mut xh = 0.0;
                        for r in 0..3 {
                            xh += m.scales()[r] * a[(i, r)] * b[(j, r)] * c[(l, r)];
                        }
                        res += (dense[i][j][l] - xh).powi(2);
                        xn += dense[i][j][l].powi(2);
                    }
                }
            }
            let want = 1.0 - res.sqrt() / xn.sqrt();
            assert!((fit(&x, &m).unwrap() - want).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn mttkrp_matches_naive(
            seed in any::<u64>(),
            i in 1usize..=8, j in 1usize..=8, l in 1usize..=3, d in 1usize..=4,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = [i, j, l];
            let (x, dense) = random_sparse(&mut rng, dims, 0.3);
            let a = rand_mat(&mut rng, i, d);
            let b = rand_mat(&mut rng, j, d);
            let c = rand_mat(&mut rng, l, d);
            for (mode, f1, f2) in [(0, &b, &c), (1, &a, &c), (2, &a, &b)] {
                let got = mttkrp(&x, f1, f2, mode).unwrap();
                let want = naive_mttkrp(&dense, dims, f1, f2, mode);
                prop_assert!(got.max_abs_diff(&want) <= 1e-10);
            }
        }

        #[test]
        fn reconstruction_entrywise(seed in any::<u64>(), n in 1usize..6, d in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = rand_mat(&mut rng, n, d);
            let b = rand_mat(&mut rng, n, d);
            let c = rand_mat(&mut rng, 2, d);
            let m = FactorModel::from_factors(a.clone(), b.clone(), c.clone(), vec![1.0; d]).unwrap();
            for l in 0..2 {
                let r = reconstruct_view(&m, l).unwrap();
                for p in 0..n {
                    for q in 0..n {
                        let want: f64 = (0..d).map(|k| a[(p, k)] * b[(q, k)] * c[(l, k)]).sum();
                        prop_assert!((r[(p, q)] - want).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn fit_invariant_under_rescaling(seed in any::<u64>(), s1 in 0.2f64..5.0, s2 in 0.2f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, _) = random_sparse(&mut rng, [5, 4, 2], 0.5);
            prop_assume!(x.nnz() > 0);
            let a = rand_mat(&mut rng, 5, 2);
            let b = rand_mat(&mut rng, 4, 2);
            let c = rand_mat(&mut rng, 2, 2);
            let m1 = FactorModel::from_factors(a.clone(), b.clone(), c.clone(), vec![1.0, 1.0]).unwrap();
            let (mut a2, mut b2, mut c2) = (a, b, c);
            a2.scale_column(0, s1);
            b2.scale_column(0, s2);
            c2.scale_column(0, 1.0 / (s1 * s2));
            b2.scale_column(1, s1);
            let m2 = FactorModel::from_factors(a2, b2, c2, vec![1.0, 1.0 / s1]).unwrap();
            prop_assert!((fit(&x, &m1).unwrap() - fit(&x, &m2).unwrap()).abs() < 1e-10);
        }
    }
}
