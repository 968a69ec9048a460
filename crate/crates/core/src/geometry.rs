//! Array element placement and user placement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the `M` elements are laid out in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ArrayLayout {
    /// Square grid spanning a square aperture of the given side, boundary
    /// elements on the edges.
    Aperture { side: f64 },
    /// Square grid with the given inter-element spacing.
    Grid { spacing: f64 },
    /// Uniform line with the given spacing.
    Line { spacing: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub positions: Vec<[f64; 2]>,
    pub layout: ArrayLayout,
}

impl ArrayGeometry {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Distance between the closest pair of neighbouring elements.
    pub fn spacing(&self) -> f64 {
        match self.layout {
            ArrayLayout::Aperture { side } => {
                let n = integer_sqrt(self.len()).unwrap_or(1);
                side / (n as f64 - 1.0)
            }
            ArrayLayout::Grid { spacing } | ArrayLayout::Line { spacing } => spacing,
        }
    }

    pub fn distance(&self, n: usize, m: usize) -> f64 {
        let a = self.positions[n];
        let b = self.positions[m];
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}

fn integer_sqrt(m: usize) -> Option<usize> {
    let r = (m as f64).sqrt().round() as usize;
    (r * r == m).then_some(r)
}

/// Places `m` elements according to `layout`.
pub fn build_array_geometry(m: usize, layout: ArrayLayout) -> Result<ArrayGeometry> {
    let dimension = match layout {
        ArrayLayout::Aperture { side } => side,
        ArrayLayout::Grid { spacing } | ArrayLayout::Line { spacing } => spacing,
    };
    if !(dimension > 0.0) || !dimension.is_finite() {
        return Err(Error::param("dimension", format!("must be positive, got {dimension}")));
    }
    if m == 0 {
        return Err(Error::param("m", "need at least one element"));
    }
    let positions = match layout {
        ArrayLayout::Aperture { side } => {
            let n = integer_sqrt(m)
                .filter(|&n| n >= 2)
                .ok_or_else(|| Error::param("m", format!("{m} is not a perfect square >= 4")))?;
            grid(n, side / (n as f64 - 1.0))
        }
        ArrayLayout::Grid { spacing } => {
            let n = integer_sqrt(m)
                .ok_or_else(|| Error::param("m", format!("{m} is not a perfect square")))?;
            grid(n, spacing)
        }
        ArrayLayout::Line { spacing } => (0..m).map(|i| [i as f64 * spacing, 0.0]).collect(),
    };
    Ok(ArrayGeometry { positions, layout })
}

fn grid(n: usize, spacing: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            out.push([col as f64 * spacing, row as f64 * spacing]);
        }
    }
    out
}

/// Large-scale gains of the `K` users.
#[derive(Debug, Clone, PartialEq)]
pub struct UserLayout {
    /// Distances to the array, m.
    pub distances: Vec<f64>,
    /// Average channel power gains `σ_k²`.
    pub variances: Vec<f64>,
}

/// Deterministic pathloss `(d / d_ref)^(−α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pathloss {
    pub exponent: f64,
    pub reference_distance: f64,
}

impl Pathloss {
    /// `σ² = d^(−α)` with distances in meters.
    pub fn unit_reference(exponent: f64) -> Self {
        Pathloss {
            exponent,
            reference_distance: 1.0,
        }
    }

    pub fn gain(&self, distance: f64) -> f64 {
        (distance / self.reference_distance).powf(-self.exponent)
    }
}

impl UserLayout {
    pub fn from_distances(distances: Vec<f64>, pathloss: Pathloss) -> Result<Self> {
        if distances.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::param("distances", "all distances must be positive"));
        }
        let variances = distances.iter().map(|&d| pathloss.gain(d)).collect();
        Ok(UserLayout {
            distances,
            variances,
        })
    }

    /// `K` users at one common distance, all with the same gain.
    pub fn equidistant(k: usize, distance: f64, pathloss: Pathloss) -> Result<Self> {
        Self::from_distances(vec![distance; k], pathloss)
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    /// Variances of every user except `k`.
    pub fn interferers(&self, k: usize) -> Vec<f64> {
        self.variances
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &v)| v)
            .collect()
    }
}

/// Radial distance for a uniform variate `u` in `(0, 1]`: area-uniform over
/// the disk, clamped below at `min_distance`.
pub fn radial_distance(u: f64, cell_radius: f64, min_distance: f64) -> f64 {
    (cell_radius * u.sqrt()).max(min_distance)
}

/// Drops `k` users uniformly over a disk of radius `cell_radius`.
pub fn place_users<R: Rng + ?Sized>(
    k: usize,
    cell_radius: f64,
    min_distance: f64,
    pathloss: Pathloss,
    rng: &mut R,
) -> Result<UserLayout> {
    if k == 0 {
        return Err(Error::param("k", "need at least one user"));
    }
    if !(cell_radius > 0.0) || !(min_distance >= 0.0) || min_distance >= cell_radius {
        return Err(Error::param(
            "cell_radius",
            format!("need 0 <= min_distance < cell_radius, got {min_distance} and {cell_radius}"),
        ));
    }
    let distances = (0..k)
        .map(|_| {
            let u = 1.0 - rng.random::<f64>();
            radial_distance(u, cell_radius, min_distance)
        })
        .collect();
    UserLayout::from_distances(distances, pathloss)
}
