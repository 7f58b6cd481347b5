//! Panel discretization of the boundary transition kernel and its invariant density.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundaryPoint, Domain, GeometryError, ShapeKind};
use crate::quadrature::gauss_legendre_8;
use crate::reflection::{LawKind, ReflectionLaw};
use crate::vector::{Point, Vector};

/// Allowed deviation of a raw row sum from one.
pub const ROW_SUM_TOLERANCE: f64 = 0.02;

pub const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("raw row sum {sum} of row {row} is off by more than {ROW_SUM_TOLERANCE}; refine the mesh")]
    RowSumOutOfTolerance { row: usize, sum: f64 },
    #[error("power iteration did not converge in {iterations} iterations (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("mesh needs at least one panel")]
    EmptyMesh,
    #[error("law dimension {law} does not match domain dimension {domain}")]
    DimensionMismatch { law: usize, domain: usize },
    #[error("{0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, KernelError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub midpoint: BoundaryPoint,
    pub measure: f64,
    /// Arc-length interval on its component (2D only).
    pub arc: Option<(f64, f64)>,
    /// Flat triangular panel (polyhedra only).
    pub triangle: Option<[Point; 3]>,
    /// Touches a corner or edge of a polygonal boundary.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelMesh {
    pub dim: usize,
    pub panels: Vec<Panel>,
}

impl PanelMesh {
    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        self.panels.iter().map(|p| p.measure).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.panels.iter().map(|p| p.measure).collect()
    }
}

/// Splits `total` into integer shares proportional to `weights`, each at
/// least one, by largest remainder.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let total = total.max(weights.len());
    let spare = total - weights.len();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * spare as f64).collect();
    let mut shares: Vec<usize> = exact.iter().map(|e| 1 + e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let assigned: usize = shares.iter().sum();
    for &i in order.iter().take(total - assigned) {
        shares[i] += 1;
    }
    shares
}

/// Equal-measure panels: arc-length splits per component (per edge on
/// polygons) in 2D, z-bands on spheres and subdivided face triangles on polyhedra.
pub fn build_mesh(domain: &Domain, m: usize) -> Result<PanelMesh> {
    if m == 0 {
        return Err(KernelError::EmptyMesh);
    }
    let mut panels = Vec::with_capacity(m);
    match domain.kind() {
        ShapeKind::Sphere(b) => {
            let bands = ((m as f64 / 2.0).sqrt().round() as usize).max(2);
            let sectors = 2 * bands;
            let measure = 4.0 * PI * b.radius * b.radius / (bands * sectors) as f64;
            for i in 0..bands {
                let z = -1.0 + 2.0 * (i as f64 + 0.5) / bands as f64;
                let rho = (1.0 - z * z).sqrt();
                for j in 0..sectors {
                    let a = TAU * (j as f64 + 0.5) / sectors as f64;
                    let p = b.center + Vector::new(rho * a.cos(), rho * a.sin(), z) * b.radius;
                    panels.push(Panel { midpoint: domain.locate(p)?, measure, arc: None, triangle: None, flagged: false });
                }
            }
        }
        ShapeKind::Polyhedron(poly) => {
            let tris: Vec<(usize, Point, Point, Point)> = poly.triangles().collect();
            let areas: Vec<f64> = tris.iter().map(|(_, a, b, c)| 0.5 * (*b - *a).cross(*c - *a).norm()).collect();
            let faces: Vec<f64> = (0..poly.face_count()).map(|f| poly.face_area(f)).collect();
            let per_face = apportion(m, &faces);
            for (f, &count) in per_face.iter().enumerate() {
                let fan: Vec<usize> = (0..tris.len()).filter(|&t| tris[t].0 == f).collect();
                let k = ((count as f64 / fan.len() as f64).sqrt().round() as usize).max(1);
                for &t in &fan {
                    let (_, a, b, c) = tris[t];
                    for (p, q, r) in subdivide(a, b, c, k) {
                        let on_edge = [p, q, r].iter().any(|&v| domain.locate(v).map_or(true, |bp| !bp.is_regular));
                        let midpoint = domain.locate((p + q + r) / 3.0)?;
                        panels.push(Panel { midpoint, measure: areas[t] / (k * k) as f64, arc: None, triangle: Some([p, q, r]), flagged: on_edge });
                    }
                }
            }
        }
        kind => {
            let comps = domain.component_measures();
            for (c, &count) in apportion(m, comps).iter().enumerate() {
                // (start, length, flag the end panels)
                let pieces: Vec<(f64, f64, bool)> = match kind {
                    ShapeKind::Polygon(p) => {
                        let mut start = 0.0;
                        p.edge_lengths(c)
                            .iter()
                            .map(|&l| {
                                start += l;
                                (start - l, l, true)
                            })
                            .collect()
                    }
                    _ => vec![(0.0, comps[c], false)],
                };
                let lengths: Vec<f64> = pieces.iter().map(|p| p.1).collect();
                for ((start, len, corners), n) in pieces.into_iter().zip(apportion(count, &lengths)) {
                    let h = len / n as f64;
                    for i in 0..n {
                        let (s0, s1) = (start + i as f64 * h, start + (i + 1) as f64 * h);
                        let midpoint = domain.point_at_arc(c, 0.5 * (s0 + s1))?;
                        let flagged = corners && (i == 0 || i + 1 == n);
                        panels.push(Panel { midpoint, measure: h, arc: Some((s0, s1)), triangle: None, flagged });
                    }
                }
            }
        }
    }
    Ok(PanelMesh { dim: domain.dim(), panels })
}

/// The k² congruent sub-triangles of (a, b, c).
fn subdivide(a: Point, b: Point, c: Point, k: usize) -> Vec<(Point, Point, Point)> {
    let kf = k as f64;
    let at = |i: usize, j: usize| a + (b - a) * (i as f64 / kf) + (c - a) * (j as f64 / kf);
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k - i {
            out.push((at(i, j), at(i + 1, j), at(i, j + 1)));
            if i + j + 2 <= k {
                out.push((at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    /// Kernel evaluated at panel midpoints.
    Midpoint,
    /// Inner integral over the target panel done exactly through the angle
    /// (2D) or solid angle (3D) it subtends, Gauss rule over the source panel.
    Galerkin,
}

impl Quadrature {
    /// Galerkin for flat-faced boundaries, where the midpoint rule keeps an
    /// O(1) error next to every corner; midpoint otherwise.
    pub fn default_for(domain: &Domain) -> Self {
        match domain.kind() {
            ShapeKind::Polygon(_) | ShapeKind::Polyhedron(_) => Quadrature::Galerkin,
            _ => Quadrature::Midpoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSystem {
    pub mesh: PanelMesh,
    pub quadrature: Quadrature,
    pub law: String,
    /// Kernel values K(x_i, y_j), row-major (panel averages for Galerkin).
    kernel: Vec<f64>,
    /// Row-stochastic transition matrix after renormalization.
    matrix: Vec<f64>,
    pub raw_row_sums: Vec<f64>,
}

/// Kernel density from `x` to `y` with all terms computed symmetrically, so
/// that the cosine kernel is bitwise symmetric.
fn kernel_density(law: &ReflectionLaw, dim: usize, x: Point, nx: Vector, y: Point, ny: Vector) -> f64 {
    let d = y - x;
    let (cx, cy) = (nx.dot(d), -ny.dot(d));
    if cx <= 0.0 || cy <= 0.0 {
        return 0.0;
    }
    let r = d.norm();
    let rp = if dim == 2 { r * r * r } else { r * r * r * r };
    if law.is_cosine() {
        law.pdf(0.0).unwrap() * (cx * cy) / rp
    } else {
        law.pdf((cx / r).min(1.0).acos()).unwrap_or(0.0) * cy * r / rp
    }
}

fn kernel_value(law: &ReflectionLaw, dim: usize, x: &BoundaryPoint, y: &BoundaryPoint) -> f64 {
    kernel_density(law, dim, x.position, x.normal.vec(), y.position, y.normal.vec())
}

fn visibility(domain: &Domain, mesh: &PanelMesh) -> Vec<Vec<bool>> {
    let n = mesh.len();
    let upper: Vec<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| domain.visible(&mesh.panels[i].midpoint, &mesh.panels[j].midpoint)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.cmp(&j) {
                    std::cmp::Ordering::Less => upper[i][j - i - 1],
                    std::cmp::Ordering::Greater => upper[j][i - j - 1],
                    std::cmp::Ordering::Equal => false,
                })
                .collect()
        })
        .collect()
}

/// Signed angle from `n` to `d` in the plane.
fn signed_angle(n: Vector, d: Vector) -> f64 {
    n.cross2(d).atan2(n.dot(d))
}

/// Degree-5 seven-point rule on the triangle, barycentric weights summing to 1.
const TRIANGLE_RULE: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059_715_871_789_770, 0.470_142_064_105_115, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.059_715_871_789_770, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.470_142_064_105_115, 0.059_715_871_789_770], 0.132_394_152_788_506),
    ([0.797_426_985_353_087, 0.101_286_507_323_456, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.797_426_985_353_087, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.101_286_507_323_456, 0.797_426_985_353_087], 0.125_939_180_544_827),
];

fn angle_between(a: Vector, b: Vector) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Probability that a direction drawn at `x` (normal `n`) lands in the flat
/// triangle `t`.
fn triangle_probability(law: &ReflectionLaw, x: Point, n: Vector, t: &[Point; 3], tn: Vector) -> f64 {
    let a = [t[0] - x, t[1] - x, t[2] - x];
    match law.kind() {
        LawKind::Cosine => {
            // projected solid angle, summed edge by edge
            let mut sum = 0.0;
            for k in 0..3 {
                let (u, v) = (a[k], a[(k + 1) % 3]);
                let g = u.cross(v);
                let gn = g.norm();
                if gn > 0.0 {
                    sum += angle_between(u, v) * n.dot(g) / gn;
                }
            }
            sum.abs() / (2.0 * PI)
        }
        LawKind::UniformHemisphere => {
            let l = [a[0].norm(), a[1].norm(), a[2].norm()];
            let num = a[0].dot(a[1].cross(a[2])).abs();
            let den = l[0] * l[1] * l[2] + a[0].dot(a[1]) * l[2] + a[0].dot(a[2]) * l[1] + a[1].dot(a[2]) * l[0];
            2.0 * num.atan2(den) / (2.0 * PI)
        }
        LawKind::Custom(_) => {
            let area = 0.5 * (t[1] - t[0]).cross(t[2] - t[0]).norm();
            subdivide(t[0], t[1], t[2], 4)
                .into_iter()
                .flat_map(|(p, q, r)| TRIANGLE_RULE.iter().map(move |(b, w)| (p * b[0] + q * b[1] + r * b[2], *w)))
                .map(|(y, w)| w * kernel_density(law, 3, x, n, y, tn) * area / 16.0)
                .sum()
        }
    }
}

fn galerkin_rows_3d(domain: &Domain, law: &ReflectionLaw, mesh: &PanelMesh) -> Result<Vec<Vec<f64>>> {
    let n = mesh.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = &mesh.panels[i];
            let t = pi.triangle.ok_or(KernelError::Unsupported("Galerkin assembly in 3D needs flat triangular panels"))?;
            let nx = pi.midpoint.normal.vec();
            let mut row = vec![0.0; n];
            for &(b, w) in &TRIANGLE_RULE {
                let x = domain.locate(t[0] * b[0] + t[1] * b[1] + t[2] * b[2])?;
                for (j, pj) in mesh.panels.iter().enumerate() {
                    if j == i || !domain.visible(&x, &pj.midpoint) {
                        continue;
                    }
                    row[j] += w * triangle_probability(law, x.position, nx, &pj.triangle.unwrap(), pj.midpoint.normal.vec());
                }
            }
            Ok(row)
        })
        .collect()
}

fn galerkin_rows_2d(domain: &Domain, law: &ReflectionLaw, mesh: &PanelMesh) -> Result<Vec<Vec<f64>>> {
    let rule = gauss_legendre_8();
    let ends: Vec<(Point, Point)> = mesh
        .panels
        .iter()
        .map(|p| {
            let (s0, s1) = p.arc.ok_or(KernelError::Unsupported("Galerkin assembly in 2D needs arc panels"))?;
            let c = p.midpoint.component;
            Ok((domain.point_at_arc(c, s0)?.position, domain.point_at_arc(c, s1)?.position))
        })
        .collect::<Result<_>>()?;
    let n = mesh.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = &mesh.panels[i];
            let (s0, s1) = pi.arc.unwrap();
            let half = 0.5 * (s1 - s0);
            let mut row = vec![0.0; n];
            for &(t, w) in &rule {
                let x = domain.point_at_arc(pi.midpoint.component, s0 + half * (t + 1.0))?;
                let nx = x.normal.vec();
                for (j, pj) in mesh.panels.iter().enumerate() {
                    if j == i || !domain.visible(&x, &pj.midpoint) {
                        continue;
                    }
                    let (a, b) = ends[j];
                    let fa = law.angular_cdf(signed_angle(nx, a - x.position));
                    let fb = law.angular_cdf(signed_angle(nx, b - x.position));
                    row[j] += 0.5 * w * (fb - fa).abs();
                }
            }
            Ok(row)
        })
        .collect()
}

/// Assembly with the quadrature suited to the domain and the row-sum check.
pub fn assemble(mesh: &PanelMesh, law: &ReflectionLaw, domain: &Domain) -> Result<KernelSystem> {
    assemble_with(mesh, law, domain, Quadrature::default_for(domain), true)
}

/// Assembles the transition matrix. With `check`, unflagged rows whose raw
/// sums deviate from one by more than [`ROW_SUM_TOLERANCE`] are an error.
pub fn assemble_with(
    mesh: &PanelMesh,
    law: &ReflectionLaw,
    domain: &Domain,
    quadrature: Quadrature,
    check: bool,
) -> Result<KernelSystem> {
    if law.dim() != domain.dim() {
        return Err(KernelError::DimensionMismatch { law: law.dim(), domain: domain.dim() });
    }
    let n = mesh.len();
    let w = mesh.weights();
    let vis = visibility(domain, mesh);
    let kernel: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let vis = &vis[i];
            (0..n).map(move |j| if vis[j] { kernel_value(law, mesh.dim, &mesh.panels[i].midpoint, &mesh.panels[j].midpoint) } else { 0.0 })
        })
        .collect();
    let rows: Vec<Vec<f64>> = match quadrature {
        Quadrature::Midpoint => (0..n).map(|i| (0..n).map(|j| kernel[i * n + j] * w[j]).collect()).collect(),
        Quadrature::Galerkin if mesh.dim == 2 => galerkin_rows_2d(domain, law, mesh)?,
        Quadrature::Galerkin => galerkin_rows_3d(domain, law, mesh)?,
    };
    let raw_row_sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    if check {
        for (i, &s) in raw_row_sums.iter().enumerate() {
            if !mesh.panels[i].flagged && (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(KernelError::RowSumOutOfTolerance { row: i, sum: s });
            }
        }
    }
    let matrix = rows.iter().zip(&raw_row_sums).flat_map(|(row, &s)| row.iter().map(move |&p| if s > 0.0 { p / s } else { 0.0 })).collect();
    Ok(KernelSystem { mesh: mesh.clone(), quadrature, law: law.name().into(), kernel, matrix, raw_row_sums })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantDensity {
    /// Density per unit boundary measure at each panel.
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl InvariantDensity {
    /// Largest relative deviation from `target` over the unflagged panels.
    pub fn max_relative_deviation(&self, mesh: &PanelMesh, target: f64) -> f64 {
        self.values
            .iter()
            .zip(&mesh.panels)
            .filter(|(_, p)| !p.flagged)
            .map(|(v, _)| (v / target - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, mesh: &PanelMesh, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", if mesh.dim == 3 { "x,y,z,measure,flagged,psi" } else { "x,y,measure,flagged,psi" })?;
        for (p, v) in mesh.panels.iter().zip(&self.values) {
            let x = p.midpoint.position;
            if mesh.dim == 3 {
                writeln!(out, "{},{},{},{},{},{}", x.x, x.y, x.z, p.measure, p.flagged, v)?;
            } else {
                writeln!(out, "{},{},{},{},{}", x.x, x.y, p.measure, p.flagged, v)?;
            }
        }
        Ok(())
    }
}

impl KernelSystem {
    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.len() + j]
    }

    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.len() + j]
    }

    /// Row vector times the renormalized matrix.
    pub fn left_multiply(&self, p: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(&self.matrix[i * n..(i + 1) * n]) {
                *o += pi * m;
            }
        }
        out
    }

    /// Un-renormalized transition probability from panel `i` to panel `j`.
    pub fn raw_transition(&self, i: usize, j: usize) -> f64 {
        self.transition(i, j) * self.raw_row_sums[i]
    }

    /// Relative balance residual of the density `psi` against the
    /// un-renormalized matrix.
    pub fn raw_balance_residual(&self, psi: &[f64]) -> f64 {
        let n = self.len();
        let w = self.mesh.weights();
        let scale = psi.iter().cloned().fold(0.0, f64::max);
        (0..n)
            .map(|i| (psi[i] * w[i] - (0..n).map(|j| psi[j] * w[j] * self.raw_transition(j, i)).sum::<f64>()).abs() / w[i])
            .fold(0.0, f64::max)
            / scale
    }

    /// Stationary density by power iteration on the adjoint, from `start`
    /// (masses per panel), until the largest change falls below `tol`.
    pub fn invariant_density_from(&self, start: Vec<f64>, tol: f64) -> Result<InvariantDensity> {
        let w = self.mesh.weights();
        let total: f64 = start.iter().sum();
        let mut p: Vec<f64> = start.iter().map(|x| x / total).collect();
        let mut change = f64::INFINITY;
        for it in 1..=MAX_ITERATIONS {
            let next = self.left_multiply(&p);
            change = next.iter().zip(&p).zip(&w).map(|((a, b), w)| (a - b).abs() / w).fold(0.0, f64::max);
            p = next;
            if change < tol {
                let values: Vec<f64> = p.iter().zip(&w).map(|(m, w)| m / w).collect();
                let after = self.left_multiply(&p);
                let residual = after.iter().zip(&p).zip(&w).map(|((a, b), w)| (a - b).abs() / w).fold(0.0, f64::max);
                return Ok(InvariantDensity { values, residual, iterations: it });
            }
        }
        Err(KernelError::NoConvergence { iterations: MAX_ITERATIONS, change })
    }

    /// Power iteration from a deliberately tilted start.
    pub fn invariant_density(&self, tol: f64) -> Result<InvariantDensity> {
        let n = self.len();
        let start = self.mesh.panels.iter().enumerate().map(|(i, p)| p.measure * (1.0 + i as f64 / n as f64)).collect();
        self.invariant_density_from(start, tol)
    }

    /// Smallest entry of the `n0`-step transition density.
    pub fn doblin_check(&self, n0: usize) -> f64 {
        let n = self.len();
        let w = self.mesh.weights();
        let mut power = self.matrix.clone();
        for _ in 1..n0 {
            power = (0..n)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let row = &power[i * n..(i + 1) * n];
                    let mut out = vec![0.0; n];
                    for (k, &a) in row.iter().enumerate() {
                        if a != 0.0 {
                            for (o, &b) in out.iter_mut().zip(&self.matrix[k * n..(k + 1) * n]) {
                                *o += a * b;
                            }
                        }
                    }
                    out
                })
                .collect();
        }
        (0..n * n).map(|k| power[k] / w[k % n]).fold(f64::INFINITY, f64::min)
    }

    /// Modulus of the subdominant eigenvalue, by power iteration on
    /// zero-sum row vectors (which the stochastic matrix preserves).
    pub fn second_eigenvalue_modulus(&self, iterations: usize) -> f64 {
        let n = self.len();
        let mut x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 97) as f64 - 48.0).collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut log_growth = Vec::with_capacity(iterations);
        for _ in 0..iterations {
            let mean = x.iter().sum::<f64>() / n as f64;
            x.iter_mut().for_each(|a| *a -= mean);
            let before = norm(&x);
            if before == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|a| *a /= before);
            x = self.left_multiply(&x);
            log_growth.push(norm(&x).ln());
        }
        let tail = &log_growth[iterations - iterations.min(20)..];
        (tail.iter().sum::<f64>() / tail.len() as f64).exp()
    }

    /// Rows of the renormalized matrix.
    pub fn write_matrix_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.len();
        for i in 0..n {
            let row: Vec<String> = self.matrix[i * n..(i + 1) * n].iter().map(f64::to_string).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
