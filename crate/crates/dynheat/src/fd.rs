//! Finite-difference oracle for the dynamic-boundary heat problem, N = 2.
//!
//! Vertex grid on [−Lx, Lx] × [0, Lz] with homogeneous Dirichlet values on the
//! far edges. The boundary row is a half cell whose balance absorbs the
//! boundary law, giving
//!
//! (ε h_z/2 + δ) ∂_t u₀ = (h_z/2 + k) ∂²_x u₀ + (u₁ − u₀)/h_z,
//!
//! a second-order approximation of δ∂_t u − k∂²_x u − ∂_z u = 0. Scaling bulk
//! rows by h_x h_z and the boundary row by h_x makes the system M u' = −A u
//! with M diagonal and A symmetric positive definite.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::InitialData;
use crate::error::{domain, Error, Result};
use crate::kernel::{HalfSpacePoint, Params};
use crate::quadrature::QuadSpec;
use crate::solution::{boundary_value, interior_value, solve, ProblemTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Backward Euler in x_N, forward Euler in x′ (per-column tridiagonal solves).
    ImexEuler,
    /// Crank–Nicolson with two backward-Euler half steps at start-up.
    CrankNicolson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdGrid {
    pub lx: f64,
    pub lz: f64,
    pub nx: usize,
    pub nz: usize,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Default for FdGrid {
    fn default() -> Self {
        FdGrid { lx: 8.0, lz: 8.0, nx: 256, nz: 256, dt: 1e-3, scheme: Scheme::CrankNicolson }
    }
}

impl FdGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lx > 0.0 && self.lz > 0.0 && self.dt > 0.0) {
            return Err(Error::Config("grid extents and dt must be positive".into()));
        }
        if self.nx < 4 || self.nz < 4 {
            return Err(Error::Config("grid needs at least 4 cells per axis".into()));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn hz(&self) -> f64 {
        self.lz / self.nz as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.lx + i as f64 * self.hx()
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.hz()
    }

    /// Same extents with `factor` times as many cells and a step `factor` times smaller.
    pub fn refined(&self, factor: usize) -> FdGrid {
        FdGrid { nx: self.nx * factor, nz: self.nz * factor, dt: self.dt / factor as f64, ..self.clone() }
    }

    /// Nodes per row, Dirichlet edges included.
    fn row(&self) -> usize {
        self.nx + 1
    }
}

/// Nodal values at one time; row-major in z, (nx + 1)(nz + 1) entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdSolution {
    pub grid: FdGrid,
    pub snapshots: Vec<Snapshot>,
    /// Discrete mass at t = 0 and at each snapshot.
    pub mass: Vec<(f64, f64)>,
    pub steps: usize,
}

impl FdSolution {
    pub fn snapshot(&self, t: f64) -> Result<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * t.max(1.0))
            .ok_or_else(|| Error::Config(format!("no snapshot at t = {t}")))
    }
}

/// Operator data on the unknowns (interior columns, rows 0..nz).
struct System {
    ni: usize,
    nj: usize,
    mass: Vec<f64>,
    cx: Vec<f64>,
    cz: f64,
}

impl System {
    fn new(p: &Params, g: &FdGrid) -> Self {
        let (hx, hz) = (g.hx(), g.hz());
        let ni = g.nx - 1;
        let nj = g.nz;
        let mut mass = Vec::with_capacity(nj);
        let mut cx = Vec::with_capacity(nj);
        for j in 0..nj {
            if j == 0 {
                mass.push((p.epsilon * hz / 2.0 + p.delta) * hx);
                cx.push((hz / 2.0 + p.kappa) / hx);
            } else {
                mass.push(p.epsilon * hx * hz);
                cx.push(hz / hx);
            }
        }
        System { ni, nj, mass, cx, cz: hx / hz }
    }

    fn len(&self) -> usize {
        self.ni * self.nj
    }

    fn diag_a(&self, j: usize) -> f64 {
        2.0 * self.cx[j] + if j == 0 { self.cz } else { 2.0 * self.cz }
    }

    /// out = A u
    fn apply_a(&self, u: &[f64], out: &mut [f64]) {
        let (ni, nj, cz) = (self.ni, self.nj, self.cz);
        out.par_chunks_mut(ni).enumerate().for_each(|(j, row)| {
            let cx = self.cx[j];
            let d = self.diag_a(j);
            for (i, o) in row.iter_mut().enumerate() {
                let k = j * ni + i;
                let mut v = d * u[k];
                if i > 0 {
                    v -= cx * u[k - 1];
                }
                if i + 1 < ni {
                    v -= cx * u[k + 1];
                }
                if j > 0 {
                    v -= cz * u[k - ni];
                }
                if j + 1 < nj {
                    v -= cz * u[k + ni];
                }
                *o = v;
            }
        });
    }

    /// Solves (M + τA) x = b by Jacobi-preconditioned conjugate gradients; x holds the start.
    fn solve_shifted(&self, tau: f64, b: &[f64], x: &mut [f64]) -> Result<usize> {
        let n = self.len();
        let ni = self.ni;
        let inv_diag: Vec<f64> = (0..n).map(|k| 1.0 / (self.mass[k / ni] + tau * self.diag_a(k / ni))).collect();
        let mut ax = vec![0.0; n];
        let op = |v: &[f64], out: &mut [f64]| {
            self.apply_a(v, out);
            out.par_iter_mut().zip(v).enumerate().for_each(|(k, (o, vi))| *o = self.mass[k / ni] * vi + tau * *o);
        };
        op(x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
        let mut d = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = 1e-13 * bnorm.max(f64::MIN_POSITIVE);
        let mut q = vec![0.0; n];
        for it in 0..2000 {
            if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= target {
                return Ok(it);
            }
            op(&d, &mut q);
            let alpha = rz / d.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
            x.par_iter_mut().zip(&d).for_each(|(xi, di)| *xi += alpha * di);
            r.par_iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
            z.par_iter_mut().zip(r.par_iter().zip(&inv_diag)).for_each(|(zi, (ri, di))| *zi = ri * di);
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            d.par_iter_mut().zip(&z).for_each(|(di, zi)| *di = zi + beta * *di);
        }
        Err(Error::Scheme("conjugate gradients did not converge in 2000 iterations".into()))
    }

    /// One IMEX step: implicit in z per column, explicit in x.
    fn imex_step(&self, dt: f64, u: &mut [f64]) {
        let (ni, nj, cz) = (self.ni, self.nj, self.cz);
        let old = u.to_vec();
        let cols: Vec<Vec<f64>> = (0..ni)
            .into_par_iter()
            .map(|i| {
                let mut lower = vec![0.0; nj];
                let mut diag = vec![0.0; nj];
                let mut upper = vec![0.0; nj];
                let mut rhs = vec![0.0; nj];
                for j in 0..nj {
                    let k = j * ni + i;
                    let cx = self.cx[j];
                    let left = if i > 0 { old[k - 1] } else { 0.0 };
                    let right = if i + 1 < ni { old[k + 1] } else { 0.0 };
                    let m = self.mass[j] / dt;
                    rhs[j] = m * old[k] + cx * (left - 2.0 * old[k] + right);
                    diag[j] = m + if j == 0 { cz } else { 2.0 * cz };
                    if j > 0 {
                        lower[j] = -cz;
                    }
                    if j + 1 < nj {
                        upper[j] = -cz;
                    }
                }
                thomas(&lower, &diag, &upper, &mut rhs);
                rhs
            })
            .collect();
        for (i, col) in cols.into_iter().enumerate() {
            for (j, v) in col.into_iter().enumerate() {
                u[j * ni + i] = v;
            }
        }
    }
}

/// Tridiagonal solve in place (no pivoting; the matrices here are diagonally dominant).
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut beta = b[0];
    d[0] /= beta;
    for j in 1..n {
        cp[j - 1] = c[j - 1] / beta;
        beta = b[j] - a[j] * cp[j - 1];
        d[j] = (d[j] - a[j] * d[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        d[j] -= cp[j] * d[j + 1];
    }
}

fn initial(p: &Params, data: &InitialData, g: &FdGrid) -> Result<Vec<f64>> {
    let ni = g.nx - 1;
    let mut u = vec![0.0; ni * g.nz];
    for j in 0..g.nz {
        for i in 0..ni {
            let x = g.x(i + 1);
            u[j * ni + i] = if j == 0 {
                // the half cell holds δψ on the line plus εφ over height h_z/2
                let half = p.epsilon * g.hz() / 2.0;
                let phi0 = interior_value(&data.interior, &HalfSpacePoint::planar(x, 0.25 * g.hz())?, p.dim)?;
                (p.delta * boundary_value(&data.boundary, &[x], p.dim)? + half * phi0) / (p.delta + half)
            } else {
                interior_value(&data.interior, &HalfSpacePoint::planar(x, g.z(j))?, p.dim)?
            };
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        return domain("initial data is not finite on the grid");
    }
    Ok(u)
}

fn expand(g: &FdGrid, u: &[f64]) -> Vec<f64> {
    let ni = g.nx - 1;
    let mut full = vec![0.0; g.row() * (g.nz + 1)];
    for j in 0..g.nz {
        full[j * g.row() + 1..j * g.row() + 1 + ni].copy_from_slice(&u[j * ni..(j + 1) * ni]);
    }
    full
}

/// Σ_bulk ε u h_x h_z + Σ_boundary (ε h_z/2 + δ) u h_x.
pub fn discrete_mass(p: &Params, g: &FdGrid, snapshot: &Snapshot) -> f64 {
    let (hx, hz) = (g.hx(), g.hz());
    let mut m = 0.0;
    for j in 0..g.nz {
        let w = if j == 0 { (p.epsilon * hz / 2.0 + p.delta) * hx } else { p.epsilon * hx * hz };
        m += w * snapshot.values[j * g.row()..(j + 1) * g.row()].iter().sum::<f64>();
    }
    m
}

fn sup(u: &[f64]) -> f64 {
    u.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Advances the data to every time in `times` (multiples of dt).
pub fn fd_solve(p: &Params, data: &InitialData, grid: &FdGrid, times: &[f64]) -> Result<FdSolution> {
    p.validate()?;
    grid.validate()?;
    if p.dim != 2 {
        return Err(Error::Unsupported("the finite-difference oracle is two-dimensional".into()));
    }
    let mut marks = Vec::with_capacity(times.len());
    for &t in times {
        let n = (t / grid.dt).round();
        if !(t > 0.0) || (n * grid.dt - t).abs() > 1e-9 * t || n < 1.0 {
            return Err(Error::Config(format!("snapshot time {t} is not a positive multiple of dt = {}", grid.dt)));
        }
        marks.push((n as usize, t));
    }
    marks.sort_by_key(|m| m.0);
    let sys = System::new(p, grid);
    let mut u = initial(p, data, grid)?;
    let cap = 10.0 * sup(&u).max(f64::MIN_POSITIVE);
    let mut mass = vec![(0.0, discrete_mass(p, grid, &Snapshot { t: 0.0, values: expand(grid, &u) }))];
    let total = marks.last().map_or(0, |m| m.0);
    let dt = grid.dt;
    let n = sys.len();
    let mut rhs = vec![0.0; n];
    let mut au = vec![0.0; n];
    let mut snapshots = Vec::new();
    let mut next = 0;
    for step in 1..=total {
        match grid.scheme {
            Scheme::ImexEuler => sys.imex_step(dt, &mut u),
            Scheme::CrankNicolson if step <= 2 => {
                // damp the start-up transient of incompatible data with two half steps of backward Euler
                for _ in 0..2 {
                    for (k, r) in rhs.iter_mut().enumerate() {
                        *r = sys.mass[k / sys.ni] * u[k];
                    }
                    let mut x = u.clone();
                    sys.solve_shifted(dt / 2.0, &rhs, &mut x)?;
                    u = x;
                }
            }
            Scheme::CrankNicolson => {
                sys.apply_a(&u, &mut au);
                for k in 0..n {
                    rhs[k] = sys.mass[k / sys.ni] * u[k] - 0.5 * dt * au[k];
                }
                let mut x = u.clone();
                sys.solve_shifted(dt / 2.0, &rhs, &mut x)?;
                u = x;
            }
        }
        let s = sup(&u);
        if !(s <= cap) {
            return Err(Error::Scheme(format!("solution grew to {s:e} at step {step} (cap {cap:e})")));
        }
        while next < marks.len() && marks[next].0 == step {
            let snap = Snapshot { t: marks[next].1, values: expand(grid, &u) };
            mass.push((snap.t, discrete_mass(p, grid, &snap)));
            snapshots.push(snap);
            next += 1;
        }
    }
    Ok(FdSolution { grid: grid.clone(), snapshots, mass, steps: total })
}

/// Rectangular probe window of sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub xs: Vec<f64>,
    pub zs: Vec<f64>,
}

impl Default for Window {
    /// [−2, 2] × [0, 2] in steps of 1/4.
    fn default() -> Self {
        Window { xs: (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect(), zs: (0..=8).map(|j| 0.25 * j as f64).collect() }
    }
}

/// Values on a window at time t, row-major in z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowField {
    pub window: Window,
    pub t: f64,
    pub values: Vec<f64>,
}

fn node(coord: f64, origin: f64, h: f64, n: usize) -> Result<usize> {
    let f = (coord - origin) / h;
    let i = f.round();
    if (f - i).abs() > 1e-9 || i < 0.0 || i > n as f64 {
        return Err(Error::Config(format!("window coordinate {coord} is not a grid node")));
    }
    Ok(i as usize)
}

impl FdSolution {
    /// Restricts the snapshot at t to the window; every window point must be a node.
    pub fn on_window(&self, window: &Window, t: f64) -> Result<WindowField> {
        let g = &self.grid;
        let snap = self.snapshot(t)?;
        let mut values = Vec::with_capacity(window.xs.len() * window.zs.len());
        for &z in &window.zs {
            let j = node(z, 0.0, g.hz(), g.nz)?;
            for &x in &window.xs {
                let i = node(x, -g.lx, g.hx(), g.nx)?;
                values.push(snap.values[j * g.row() + i]);
            }
        }
        Ok(WindowField { window: window.clone(), t: snap.t, values })
    }
}

/// The kernel solution on a window.
pub fn kernel_on_window(
    tag: ProblemTag,
    p: &Params,
    data: &InitialData,
    window: &Window,
    t: f64,
    spec: &QuadSpec,
) -> Result<WindowField> {
    let pts: Vec<(f64, f64)> = window.zs.iter().flat_map(|&z| window.xs.iter().map(move |&x| (x, z))).collect();
    let values = pts
        .par_iter()
        .map(|&(x, z)| solve(tag, p, None, data, &HalfSpacePoint::planar(x, z)?, t, spec).map(|q| q.value))
        .collect::<Result<_>>()?;
    Ok(WindowField { window: window.clone(), t, values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub t: f64,
    pub sup_abs: f64,
    /// sup |a − b| / sup |a|
    pub sup_rel: f64,
    /// root mean square of a − b over the window
    pub l2_abs: f64,
    pub l2_rel: f64,
}

/// Discrepancy of `b` against the reference `a`.
pub fn compare(a: &WindowField, b: &WindowField) -> Result<Discrepancy> {
    if a.window != b.window || a.values.len() != b.values.len() || (a.t - b.t).abs() > 1e-9 * a.t.max(1.0) {
        return Err(Error::Config("compared fields live on different windows or times".into()));
    }
    let n = a.values.len() as f64;
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let sup_abs = sup(&diff);
    let ref_sup = sup(&a.values);
    let l2_abs = (diff.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let ref_l2 = (a.values.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let rel = |x: f64, r: f64| if r > 0.0 { x / r } else if x == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(Discrepancy { t: a.t, sup_abs, sup_rel: rel(sup_abs, ref_sup), l2_abs, l2_rel: rel(l2_abs, ref_l2) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub nx: usize,
    pub nz: usize,
    pub dt: f64,
    pub sup_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub t: f64,
    pub rows: Vec<RefinementRow>,
    /// log₂ of successive error ratios.
    pub orders: Vec<f64>,
}

/// Errors against the kernel solution under simultaneous (h, dt) halving.
pub fn refinement_study(
    p: &Params,
    data: &InitialData,
    base: &FdGrid,
    levels: usize,
    t: f64,
    window: &Window,
    spec: &QuadSpec,
) -> Result<RefinementReport> {
    if levels < 2 {
        return Err(Error::Config("refinement needs at least two levels".into()));
    }
    let tag = if p.kappa == 0.0 { ProblemTag::HD } else { ProblemTag::HDD };
    let exact = kernel_on_window(tag, p, data, window, t, spec)?;
    let rows = (0..levels)
        .map(|l| {
            let g = base.refined(1 << l);
            let fd = fd_solve(p, data, &g, &[t])?;
            let d = compare(&exact, &fd.on_window(window, t)?)?;
            Ok(RefinementRow { nx: g.nx, nz: g.nz, dt: g.dt, sup_abs: d.sup_abs })
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = rows.windows(2).map(|w| (w[0].sup_abs / w[1].sup_abs).log2()).collect();
    Ok(RefinementReport { t, rows, orders })
}

/// Writes a snapshot as CSV rows (x, z, u), Dirichlet edges included.
pub fn write_snapshot_csv<W: Write>(out: W, grid: &FdGrid, snapshot: &Snapshot) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "z", "u"]).map_err(std::io::Error::from)?;
    for j in 0..=grid.nz {
        for i in 0..=grid.nx {
            let u = snapshot.values[j * grid.row() + i];
            w.write_record([snapshot.t, grid.x(i), grid.z(j), u].iter().map(|v| format!("{v:e}")))
                .map_err(std::io::Error::from)?;
        }
    }
    Ok(w.flush()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::BoundaryData;

    fn coarse(scheme: Scheme) -> FdGrid {
        FdGrid { lx: 12.0, lz: 12.0, nx: 96, nz: 48, dt: 1e-2, scheme }
    }

    #[test]
    fn zero_stays_zero() {
        let p = Params::new(1.0, 1.0, 1.0, 2).unwrap();
        for s in [Scheme::ImexEuler, Scheme::CrankNicolson] {
            let sol = fd_solve(&p, &InitialData::zero(), &coarse(s), &[0.5]).unwrap();
            assert!(sol.snapshots[0].values.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn constants_are_preserved_inside() {
        let p = Params::new(1.0, 1.0, 1.0, 2).unwrap();
        let g = coarse(Scheme::CrankNicolson);
        let sol = fd_solve(&p, &InitialData::constants(1.0, 1.0), &g, &[1.0]).unwrap();
        let w = Window { xs: vec![-1.0, 0.0, 1.0], zs: vec![0.0, 1.0] };
        for v in sol.on_window(&w, 1.0).unwrap().values {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn mass_is_conserved() {
        let p = Params::new(1.0, 1.0, 1.0, 2).unwrap();
        let data = InitialData::boundary_only(BoundaryData::gaussian(vec![0.0], 0.5));
        for s in [Scheme::ImexEuler, Scheme::CrankNicolson] {
            let sol = fd_solve(&p, &data, &coarse(s), &[0.5, 1.0]).unwrap();
            let m0 = sol.mass[0].1;
            for (_, m) in &sol.mass {
                assert!((m - m0).abs() < 1e-6, "{s:?}: {m} vs {m0}");
            }
            assert!(sol.snapshots.iter().all(|s| s.values.iter().all(|v| *v >= 0.0)));
        }
    }

    #[test]
    fn thomas_solves() {
        let (a, b, c) = ([0.0, -1.0, -1.0], [4.0, 4.0, 4.0], [-1.0, -1.0, 0.0]);
        let mut d = [3.0, 2.0, 3.0];
        thomas(&a, &b, &c, &mut d);
        for v in d {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_windows_and_times() {
        let p = Params::new(1.0, 1.0, 1.0, 2).unwrap();
        let g = coarse(Scheme::CrankNicolson);
        assert!(fd_solve(&p, &InitialData::zero(), &g, &[0.005]).is_err());
        let sol = fd_solve(&p, &InitialData::zero(), &g, &[0.1]).unwrap();
        assert!(sol.on_window(&Window { xs: vec![0.1], zs: vec![0.0] }, 0.1).is_err());
        let a = WindowField { window: Window::default(), t: 1.0, values: vec![0.0; 153] };
        let b = WindowField { window: Window { xs: vec![0.0], zs: vec![0.0] }, t: 1.0, values: vec![0.0] };
        assert!(compare(&a, &b).is_err());
        assert_eq!(compare(&a, &a).unwrap().sup_abs, 0.0);
    }
}
