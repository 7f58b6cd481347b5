//! JSON domain descriptions and the built-in domain catalogue.

use serde::{Deserialize, Serialize};

use super::{ConvexPolyhedron, Domain, GeometryError, Result, ShapeKind};
use crate::vector::Vector;

/// Names accepted by [`Domain::builtin`].
pub const BUILTIN_DOMAINS: [&str; 7] = [
    "unit-disk",
    "unit-square",
    "ellipse-2x1",
    "l-shape",
    "annulus-1-2",
    "unit-sphere",
    "unit-cube",
];

/// Shape fields of a domain description file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ShapeSpec {
    /// Outer ring first (counterclockwise), then holes (clockwise).
    Polygon2d { components: Vec<Vec<[f64; 2]>> },
    Disk { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
    Annulus { center: [f64; 2], inner_radius: f64, outer_radius: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    Polyhedron3d { faces: Vec<Vec<[f64; 3]>> },
}

/// Contents of a domain description file:
/// `{"type": "disk", "center": [0, 0], "radius": 1, "eps_geom": 1e-9}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: ShapeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_geom: Option<f64>,
}

fn v2(p: [f64; 2]) -> Vector {
    Vector::new2(p[0], p[1])
}

fn v3(p: [f64; 3]) -> Vector {
    Vector::new(p[0], p[1], p[2])
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        let domain = match &self.shape {
            ShapeSpec::Polygon2d { components } => {
                Domain::polygon(components.iter().map(|c| c.iter().copied().map(v2).collect()).collect())?
            }
            ShapeSpec::Disk { center, radius } => Domain::disk(v2(*center), *radius)?,
            ShapeSpec::Ellipse { center, semi_axes } => Domain::ellipse(v2(*center), semi_axes[0], semi_axes[1])?,
            ShapeSpec::Annulus { center, inner_radius, outer_radius } => {
                Domain::annulus(v2(*center), *inner_radius, *outer_radius)?
            }
            ShapeSpec::Sphere { center, radius } => Domain::sphere(v3(*center), *radius)?,
            ShapeSpec::Polyhedron3d { faces } => {
                Domain::convex_polyhedron(faces.iter().map(|f| f.iter().copied().map(v3).collect()).collect())?
            }
        };
        match self.eps_geom {
            Some(eps) => domain.with_eps_geom(eps),
            None => Ok(domain),
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let shape = match name {
            "unit-disk" => ShapeSpec::Disk { center: [0.0, 0.0], radius: 1.0 },
            "unit-square" => ShapeSpec::Polygon2d {
                components: vec![vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]],
            },
            "ellipse-2x1" => ShapeSpec::Ellipse { center: [0.0, 0.0], semi_axes: [2.0, 1.0] },
            "l-shape" => ShapeSpec::Polygon2d { components: vec![l_shape_vertices([0.0, 0.0], 1.0)] },
            "annulus-1-2" => ShapeSpec::Annulus { center: [0.0, 0.0], inner_radius: 1.0, outer_radius: 2.0 },
            "unit-sphere" => ShapeSpec::Sphere { center: [0.0, 0.0, 0.0], radius: 1.0 },
            "unit-cube" => ShapeSpec::Polyhedron3d { faces: cube_faces() },
            _ => return None,
        };
        Some(DomainSpec { shape, eps_geom: None })
    }
}

/// Square of side `side` at `origin` minus its top-right quarter.
pub(crate) fn l_shape_vertices(origin: [f64; 2], side: f64) -> Vec<[f64; 2]> {
    let [x, y] = origin;
    let h = 0.5 * side;
    vec![[x, y], [x + side, y], [x + side, y + h], [x + h, y + h], [x + h, y + side], [x, y + side]]
}

fn cube_faces() -> Vec<Vec<[f64; 3]>> {
    let c = |x: u8, y: u8, z: u8| [x as f64, y as f64, z as f64];
    vec![
        vec![c(0, 0, 0), c(0, 1, 0), c(1, 1, 0), c(1, 0, 0)],
        vec![c(0, 0, 1), c(1, 0, 1), c(1, 1, 1), c(0, 1, 1)],
        vec![c(0, 0, 0), c(1, 0, 0), c(1, 0, 1), c(0, 0, 1)],
        vec![c(0, 1, 0), c(0, 1, 1), c(1, 1, 1), c(1, 1, 0)],
        vec![c(0, 0, 0), c(0, 0, 1), c(0, 1, 1), c(0, 1, 0)],
        vec![c(1, 0, 0), c(1, 1, 0), c(1, 1, 1), c(1, 0, 1)],
    ]
}

impl Domain {
    /// One of [`BUILTIN_DOMAINS`].
    pub fn builtin(name: &str) -> Result<Domain> {
        DomainSpec::builtin(name)
            .ok_or_else(|| GeometryError::InvalidDomain(format!("unknown built-in domain '{name}'")))?
            .build()
    }

    /// The unit square minus its top-right quarter, translated to `origin`
    /// and scaled to `side`.
    pub fn l_shape(origin: [f64; 2], side: f64) -> Result<Domain> {
        Domain::polygon(vec![l_shape_vertices(origin, side).into_iter().map(v2).collect()])
    }

    /// Description that rebuilds this domain.
    pub fn to_spec(&self) -> DomainSpec {
        let shape = match self.kind() {
            ShapeKind::Polygon(p) => ShapeSpec::Polygon2d {
                components: p.components().map(|c| c.iter().map(|v| [v.x, v.y]).collect()).collect(),
            },
            ShapeKind::Disk(b) => ShapeSpec::Disk { center: [b.center.x, b.center.y], radius: b.radius },
            ShapeKind::Ellipse(e) => ShapeSpec::Ellipse { center: [e.center.x, e.center.y], semi_axes: [e.semi_x, e.semi_y] },
            ShapeKind::Annulus(a) => ShapeSpec::Annulus {
                center: [a.center.x, a.center.y],
                inner_radius: a.inner,
                outer_radius: a.outer,
            },
            ShapeKind::Sphere(b) => ShapeSpec::Sphere { center: [b.center.x, b.center.y, b.center.z], radius: b.radius },
            ShapeKind::Polyhedron(p) => ShapeSpec::Polyhedron3d { faces: polyhedron_faces(p) },
        };
        DomainSpec { shape, eps_geom: Some(self.eps_geom()) }
    }
}

fn polyhedron_faces(p: &ConvexPolyhedron) -> Vec<Vec<[f64; 3]>> {
    p.face_vertices().map(|f| f.iter().map(|v| [v.x, v.y, v.z]).collect()).collect()
}
