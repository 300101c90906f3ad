//! Operator-splitting solver for the convex planning subproblem.
//!
//! Decision variable: `M` planar controls `u`. Objective: `½ dt Σ ‖u_k‖²` plus separable convex
//! terms on affine images of `u` (controls, knot velocities, knot positions). Each image row is
//! a planar point handled by a closed-form proximal operator: ball and halfspace projections,
//! point pins, and the slack-penalized task disk.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::state::Vec2;

/// Which affine image of the controls a block constrains. Row `r` refers to knot `r + 1`
/// for velocities and positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Image {
    Control,
    Velocity,
    Position,
}

#[derive(Debug, Clone)]
pub(crate) enum Prox {
    /// `‖x − c_r‖ ≤ radius`.
    Ball { centers: Vec<Vec2>, radius: f64 },
    /// `n_r · x ≥ β_r` with unit `n_r`.
    Halfspace {
        normals: Vec<Vec2>,
        offsets: Vec<f64>,
    },
    /// `x = target_r`.
    Pin { targets: Vec<Vec2> },
    /// `weight · max(0, ‖x − c_r‖² − radius²)`.
    TaskPenalty {
        centers: Vec<Vec2>,
        radius: f64,
        weight: f64,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub image: Image,
    /// Rows (0-based, ascending) of the image this block acts on.
    pub rows: Vec<usize>,
    pub prox: Prox,
}

impl Block {
    pub fn all_rows(image: Image, m: usize, prox: Prox) -> Self {
        Block {
            image,
            rows: (0..m).collect(),
            prox,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdmmSettings {
    pub max_iters: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub relaxation: f64,
    pub rho: f64,
    /// Residual-balancing period for the penalty parameter.
    pub adapt_every: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        AdmmSettings {
            max_iters: 5_000,
            eps_abs: 1e-9,
            eps_rel: 1e-9,
            relaxation: 1.6,
            rho: 1.0,
            adapt_every: 25,
        }
    }
}

/// Iterate carried between solves with the same block layout.
#[derive(Debug, Clone)]
pub(crate) struct WarmStart {
    pub z: Vec<Vec<Vec2>>,
    pub w: Vec<Vec<Vec2>>,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct AdmmOutput {
    pub u: Vec<Vec2>,
    pub converged: bool,
    pub iterations: usize,
    pub warm: WarmStart,
}

/// Affine maps from controls to knot velocities and positions of a double integrator.
#[derive(Debug, Clone)]
pub(crate) struct Dynamics {
    pub m: usize,
    pub dt: f64,
    pub p0: Vec2,
    pub v0: Vec2,
}

impl Dynamics {
    fn offset(&self, image: Image, r: usize) -> Vec2 {
        match image {
            Image::Control => Vec2::ZERO,
            Image::Velocity => self.v0,
            Image::Position => self.p0 + self.v0 * ((r + 1) as f64 * self.dt),
        }
    }

    /// Linear part of the image, all rows.
    fn apply(&self, image: Image, u: &[Vec2], out: &mut [Vec2]) {
        let dt = self.dt;
        match image {
            Image::Control => out.copy_from_slice(u),
            Image::Velocity => {
                let mut s = Vec2::ZERO;
                for (r, &uk) in u.iter().enumerate() {
                    s += uk;
                    out[r] = s * dt;
                }
            }
            Image::Position => {
                // Σ_{j≤r} dt² (r + ½ − j) u_j
                let mut s = Vec2::ZERO;
                let mut w = Vec2::ZERO;
                for (r, &uk) in u.iter().enumerate() {
                    s += uk;
                    w += uk * r as f64;
                    out[r] = (s * (r as f64 + 0.5) - w) * (dt * dt);
                }
            }
        }
    }

    /// Adjoint of `apply`, accumulated into `out`.
    fn apply_t_add(&self, image: Image, y: &[Vec2], out: &mut [Vec2]) {
        let dt = self.dt;
        match image {
            Image::Control => {
                for (o, &yk) in out.iter_mut().zip(y) {
                    *o += yk;
                }
            }
            Image::Velocity => {
                let mut s = Vec2::ZERO;
                for j in (0..self.m).rev() {
                    s += y[j];
                    out[j] += s * dt;
                }
            }
            Image::Position => {
                // dt² Σ_{r≥j} (r + ½ − j) y_r
                let mut s = Vec2::ZERO;
                let mut w = Vec2::ZERO;
                for j in (0..self.m).rev() {
                    s += y[j];
                    w += y[j] * (j as f64 + 0.5);
                    out[j] += (w - s * j as f64) * (dt * dt);
                }
            }
        }
    }

    /// Dense matrix of one image (identical for both coordinates).
    fn dense(&self, image: Image) -> DMatrix<f64> {
        let m = self.m;
        let dt = self.dt;
        DMatrix::from_fn(m, m, |r, j| {
            if j > r {
                return 0.0;
            }
            match image {
                Image::Control => f64::from(u8::from(r == j)),
                Image::Velocity => dt,
                Image::Position => dt * dt * (r as f64 + 0.5 - j as f64),
            }
        })
    }

    /// Knot velocities and positions produced by `u` (rows are knots `1..=M`).
    pub fn rollout(&self, u: &[Vec2]) -> (Vec<Vec2>, Vec<Vec2>) {
        let mut v = vec![Vec2::ZERO; self.m];
        let mut p = vec![Vec2::ZERO; self.m];
        self.apply(Image::Velocity, u, &mut v);
        self.apply(Image::Position, u, &mut p);
        for r in 0..self.m {
            v[r] += self.offset(Image::Velocity, r);
            p[r] += self.offset(Image::Position, r);
        }
        (v, p)
    }
}

/// Per-row penalty scaling `dt / ‖a_r‖²`, which puts every row on the same footing as the
/// `dt`-weighted objective.
fn row_scales(dense: &[DMatrix<f64>; 3], dt: f64) -> [Vec<f64>; 3] {
    let scales = |a: &DMatrix<f64>| -> Vec<f64> {
        a.row_iter().map(|row| dt / row.norm_squared()).collect()
    };
    [scales(&dense[0]), scales(&dense[1]), scales(&dense[2])]
}

fn prox(p: &Prox, row: usize, q: Vec2, rho: f64) -> Vec2 {
    match p {
        Prox::Ball { centers, radius } => {
            let d = q - centers[row];
            let n = d.norm();
            if n <= *radius {
                q
            } else {
                centers[row] + d * (radius / n)
            }
        }
        Prox::Halfspace { normals, offsets } => {
            let n = normals[row];
            let gap = offsets[row] - n.dot(q);
            if gap > 0.0 {
                q + n * gap
            } else {
                q
            }
        }
        Prox::Pin { targets } => targets[row],
        Prox::TaskPenalty {
            centers,
            radius,
            weight,
        } => {
            let d = q - centers[row];
            let r0 = d.norm();
            if r0 <= *radius {
                return q;
            }
            let r = (rho * r0 / (rho + 2.0 * weight)).max(*radius);
            centers[row] + d * (r / r0)
        }
    }
}

fn factor(
    dyn_: &Dynamics,
    blocks: &[Block],
    rho: f64,
    dense: &[DMatrix<f64>; 3],
    scales: &[Vec<f64>; 3],
) -> Cholesky<f64, Dyn> {
    let m = dyn_.m;
    let mut k = DMatrix::<f64>::identity(m, m) * dyn_.dt;
    for b in blocks {
        let a = &dense[b.image as usize];
        let sc = &scales[b.image as usize];
        for &r in &b.rows {
            let row = a.row(r).transpose();
            k.ger(rho * sc[r], &row, &row, 1.0);
        }
    }
    Cholesky::new(k).expect("planning normal matrix is positive definite")
}

fn inf_norm(v: &[Vec2]) -> f64 {
    v.iter().map(|x| x.max_abs()).fold(0.0, f64::max)
}

/// Solves `min ½ dt Σ‖u‖² + Σ_b g_b(A_b u + r_b)` starting from `u0`.
pub(crate) fn solve(
    dyn_: &Dynamics,
    blocks: &[Block],
    u0: &[Vec2],
    warm: Option<WarmStart>,
    settings: &AdmmSettings,
) -> AdmmOutput {
    let m = dyn_.m;
    let dense = [
        dyn_.dense(Image::Control),
        dyn_.dense(Image::Velocity),
        dyn_.dense(Image::Position),
    ];
    let scales = row_scales(&dense, dyn_.dt);
    let offsets: Vec<Vec<Vec2>> = blocks
        .iter()
        .map(|b| b.rows.iter().map(|&r| dyn_.offset(b.image, r)).collect())
        .collect();

    let mut u = u0.to_vec();
    let mut full = vec![Vec2::ZERO; m];
    let mut image_of = |b: &Block, u: &[Vec2], off: &[Vec2], out: &mut Vec<Vec2>| {
        dyn_.apply(b.image, u, &mut full);
        out.clear();
        out.extend(b.rows.iter().zip(off).map(|(&r, &o)| full[r] + o));
    };

    let mut ax: Vec<Vec<Vec2>> = vec![Vec::new(); blocks.len()];
    for (bi, b) in blocks.iter().enumerate() {
        image_of(b, &u, &offsets[bi], &mut ax[bi]);
    }

    let (mut z, mut w, mut rho) = match warm {
        Some(ws)
            if ws.z.len() == blocks.len()
                && ws
                    .z
                    .iter()
                    .zip(blocks)
                    .all(|(z, b)| z.len() == b.rows.len()) =>
        {
            (ws.z, ws.w, ws.rho)
        }
        _ => (
            ax.clone(),
            blocks
                .iter()
                .map(|b| vec![Vec2::ZERO; b.rows.len()])
                .collect(),
            settings.rho,
        ),
    };

    let mut chol = factor(dyn_, blocks, rho, &dense, &scales);
    let mut rhs = DMatrix::<f64>::zeros(m, 2);
    let mut scatter = vec![Vec2::ZERO; m];
    let mut acc = vec![Vec2::ZERO; m];
    let mut z_prev: Vec<Vec<Vec2>> = z.clone();
    let mut converged = false;
    let mut iterations = 0;
    let a = settings.relaxation;

    for it in 1..=settings.max_iters {
        iterations = it;
        // u-update: (dt I + Σ ρ_b A_bᵀA_b) u = Σ ρ_b A_bᵀ (z_b − r_b − w_b)
        acc.iter_mut().for_each(|x| *x = Vec2::ZERO);
        for (bi, b) in blocks.iter().enumerate() {
            let sc = &scales[b.image as usize];
            scatter.iter_mut().for_each(|x| *x = Vec2::ZERO);
            for (i, &r) in b.rows.iter().enumerate() {
                scatter[r] = (z[bi][i] - offsets[bi][i] - w[bi][i]) * (rho * sc[r]);
            }
            dyn_.apply_t_add(b.image, &scatter, &mut acc);
        }
        for (r, v) in acc.iter().enumerate() {
            rhs[(r, 0)] = v.x;
            rhs[(r, 1)] = v.y;
        }
        chol.solve_mut(&mut rhs);
        for (r, uk) in u.iter_mut().enumerate() {
            *uk = Vec2::new(rhs[(r, 0)], rhs[(r, 1)]);
        }

        // z- and w-updates with over-relaxation.
        for (bi, b) in blocks.iter().enumerate() {
            image_of(b, &u, &offsets[bi], &mut ax[bi]);
            let sc = &scales[b.image as usize];
            z_prev[bi].copy_from_slice(&z[bi]);
            for (i, &r) in b.rows.iter().enumerate() {
                let h = ax[bi][i] * a + z[bi][i] * (1.0 - a);
                let zi = prox(&b.prox, i, h + w[bi][i], rho * sc[r]);
                w[bi][i] += h - zi;
                z[bi][i] = zi;
            }
        }

        let check = it % 5 == 0 || it == settings.max_iters;
        let adapt = settings.adapt_every > 0 && it % settings.adapt_every == 0;
        if !(check || adapt) {
            continue;
        }

        let mut prim = 0.0f64;
        let mut prim_scale = 0.0f64;
        for bi in 0..blocks.len() {
            for i in 0..blocks[bi].rows.len() {
                prim = prim.max((ax[bi][i] - z[bi][i]).max_abs());
                prim_scale = prim_scale.max(ax[bi][i].max_abs()).max(z[bi][i].max_abs());
            }
        }
        // Dual residual Σ ρ_b A_bᵀ (z_b − z_b_prev) and dual magnitude Σ A_bᵀ y_b, in control units.
        let mut dres = vec![Vec2::ZERO; m];
        let mut aty = vec![Vec2::ZERO; m];
        for (bi, b) in blocks.iter().enumerate() {
            let sc = &scales[b.image as usize];
            scatter.iter_mut().for_each(|x| *x = Vec2::ZERO);
            for (i, &r) in b.rows.iter().enumerate() {
                scatter[r] = (z[bi][i] - z_prev[bi][i]) * (rho * sc[r]);
            }
            dyn_.apply_t_add(b.image, &scatter, &mut dres);
            scatter.iter_mut().for_each(|x| *x = Vec2::ZERO);
            for (i, &r) in b.rows.iter().enumerate() {
                scatter[r] = w[bi][i] * (rho * sc[r]);
            }
            dyn_.apply_t_add(b.image, &scatter, &mut aty);
        }
        let dual = inf_norm(&dres) / dyn_.dt;
        let dual_scale = inf_norm(&u).max(inf_norm(&aty) / dyn_.dt);

        if check
            && prim <= settings.eps_abs + settings.eps_rel * prim_scale
            && dual <= settings.eps_abs + settings.eps_rel * dual_scale
        {
            converged = true;
            break;
        }

        if adapt {
            let p_rel = prim / prim_scale.max(1e-30);
            let d_rel = dual / dual_scale.max(1e-30);
            if p_rel > 0.0 && d_rel > 0.0 {
                let ratio = (p_rel / d_rel).sqrt().clamp(1e-3, 1e3);
                if !(0.2..=5.0).contains(&ratio) {
                    let new_rho = (rho * ratio).clamp(1e-6, 1e8);
                    let scale = rho / new_rho;
                    for wb in w.iter_mut() {
                        for wi in wb.iter_mut() {
                            *wi = *wi * scale;
                        }
                    }
                    rho = new_rho;
                    chol = factor(dyn_, blocks, rho, &dense, &scales);
                }
            }
        }
    }

    AdmmOutput {
        u,
        converged,
        iterations,
        warm: WarmStart { z, w, rho },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{propagate, BoidState};
    use approx::assert_abs_diff_eq;

    fn dynamics(m: usize, dt: f64) -> Dynamics {
        Dynamics {
            m,
            dt,
            p0: Vec2::new(0.3, -0.2),
            v0: Vec2::new(0.5, 1.0),
        }
    }

    #[test]
    fn images_match_propagation() {
        let d = dynamics(7, 0.3);
        let u: Vec<Vec2> = (0..7)
            .map(|k| Vec2::new((k as f64).sin(), 0.2 * k as f64))
            .collect();
        let (v, p) = d.rollout(&u);
        let mut x = BoidState::new(d.p0, d.v0);
        for r in 0..7 {
            x = propagate(x, u[r], d.dt);
            assert_abs_diff_eq!(x.position.x, p[r].x, epsilon = 1e-13);
            assert_abs_diff_eq!(x.position.y, p[r].y, epsilon = 1e-13);
            assert_abs_diff_eq!(x.velocity.x, v[r].x, epsilon = 1e-13);
            assert_abs_diff_eq!(x.velocity.y, v[r].y, epsilon = 1e-13);
        }
    }

    #[test]
    fn adjoints_match_dense() {
        let d = dynamics(6, 0.25);
        let y: Vec<Vec2> = (0..6)
            .map(|k| Vec2::new(1.0 + k as f64, (k as f64).cos()))
            .collect();
        for image in [Image::Control, Image::Velocity, Image::Position] {
            let a = d.dense(image);
            let mut out = vec![Vec2::ZERO; 6];
            d.apply_t_add(image, &y, &mut out);
            let mut fwd = vec![Vec2::ZERO; 6];
            d.apply(image, &y, &mut fwd);
            for j in 0..6 {
                let col: f64 = (0..6).map(|r| a[(r, j)] * y[r].x).sum();
                assert_abs_diff_eq!(col, out[j].x, epsilon = 1e-12);
                let row: f64 = (0..6).map(|c| a[(j, c)] * y[c].x).sum();
                assert_abs_diff_eq!(row, fwd[j].x, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn task_prox_minimizes_radial_objective() {
        let p = Prox::TaskPenalty {
            centers: vec![Vec2::ZERO],
            radius: 1.0,
            weight: 0.5,
        };
        let q = Vec2::new(3.0, 0.0);
        let z = prox(&p, 0, q, 2.0);
        // Brute force over the ray through q.
        let obj = |r: f64| 0.5 * (r * r - 1.0).max(0.0) + 1.0 * (r - 3.0).powi(2);
        let best = (0..=30000)
            .map(|i| i as f64 * 1e-4)
            .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
            .unwrap();
        assert_abs_diff_eq!(z.x, best, epsilon = 1e-4);
        assert_eq!(z.y, 0.0);
        assert_eq!(prox(&p, 0, Vec2::new(0.5, 0.5), 2.0), Vec2::new(0.5, 0.5));
    }

    #[test]
    fn pinned_transfer_is_linear_in_midpoint_time() {
        // Only a terminal pin: the discrete optimum is affine in the interval midpoints.
        let m = 40;
        let d = Dynamics {
            m,
            dt: 1.0 / m as f64,
            p0: Vec2::ZERO,
            v0: Vec2::ZERO,
        };
        let blocks = vec![
            Block {
                image: Image::Position,
                rows: vec![m - 1],
                prox: Prox::Pin {
                    targets: vec![Vec2::new(1.0, 0.0)],
                },
            },
            Block {
                image: Image::Velocity,
                rows: vec![m - 1],
                prox: Prox::Pin {
                    targets: vec![Vec2::ZERO],
                },
            },
        ];
        let out = solve(
            &d,
            &blocks,
            &vec![Vec2::ZERO; m],
            None,
            &AdmmSettings::default(),
        );
        assert!(out.converged, "iterations {}", out.iterations);
        let (v, p) = d.rollout(&out.u);
        assert_abs_diff_eq!(p[m - 1].x, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(v[m - 1].x, 0.0, epsilon = 1e-7);
        let slope = out.u[1].x - out.u[0].x;
        for k in 1..m {
            assert_abs_diff_eq!(out.u[k].x - out.u[k - 1].x, slope, epsilon = 1e-6);
        }
    }
}
