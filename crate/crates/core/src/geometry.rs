//! Domains, boundary partitions, scattered node sets and their fill and
//! separation distances.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on generated node counts.
pub const MAX_NODES: usize = 2_000_000;

/// Default probe resolution (probes per coordinate direction) for 1D sets.
pub const DEFAULT_RESOLUTION_1D: usize = 8192;
/// Default probe resolution (probes per coordinate direction) for 2D sets.
pub const DEFAULT_RESOLUTION_2D: usize = 1024;

/// Bounded regions supported by the lab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Region {
    Interval { a: f64, b: f64 },
    Rectangle { lo: [f64; 2], hi: [f64; 2] },
    Disk { center: [f64; 2], radius: f64 },
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Interval { .. } => 1,
            Region::Rectangle { .. } | Region::Disk { .. } => 2,
        }
    }

    pub fn faces(&self) -> &'static [Face] {
        match self {
            Region::Interval { .. } => &[Face::Left, Face::Right],
            Region::Rectangle { .. } => &[Face::Bottom, Face::Right, Face::Top, Face::Left],
            Region::Disk { .. } => &[Face::Circle],
        }
    }

    /// Axis-aligned bounding box as `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Interval { a, b } => (vec![*a], vec![*b]),
            Region::Rectangle { lo, hi } => (lo.to_vec(), hi.to_vec()),
            Region::Disk { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Region::Interval { a, b } => b - a,
            Region::Rectangle { lo, hi } => ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt(),
            Region::Disk { radius, .. } => 2.0 * radius,
        }
    }

    fn tolerance(&self) -> f64 {
        1e-12 * self.diameter().max(1.0)
    }

    /// Membership in the closure of the region.
    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = self.tolerance();
        match self {
            Region::Interval { a, b } => x[0] >= a - tol && x[0] <= b + tol,
            Region::Rectangle { lo, hi } => (0..2).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol),
            Region::Disk { center, radius } => {
                ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt() <= radius + tol
            }
        }
    }

    /// Distance from `x` (inside the closure) to the boundary along the unit
    /// direction `dir`.
    pub fn ray_exit(&self, x: &[f64], dir: &[f64]) -> f64 {
        match self {
            Region::Interval { a, b } => {
                if dir[0] > 0.0 {
                    (b - x[0]) / dir[0]
                } else {
                    (a - x[0]) / dir[0]
                }
            }
            Region::Rectangle { lo, hi } => {
                let mut t = f64::INFINITY;
                for i in 0..2 {
                    if dir[i] > 1e-300 {
                        t = t.min((hi[i] - x[i]) / dir[i]);
                    } else if dir[i] < -1e-300 {
                        t = t.min((lo[i] - x[i]) / dir[i]);
                    }
                }
                t.max(0.0)
            }
            Region::Disk { center, radius } => {
                let p = [x[0] - center[0], x[1] - center[1]];
                let b = p[0] * dir[0] + p[1] * dir[1];
                let c = p[0] * p[0] + p[1] * p[1] - radius * radius;
                (-b + (b * b - c).max(0.0).sqrt()).max(0.0)
            }
        }
    }

    /// Geometry of one boundary face.
    pub fn face_frame(&self, face: Face) -> Result<FaceFrame> {
        let bad = || Error::InvalidParameters(format!("face {face} does not belong to {self:?}"));
        Ok(match (self, face) {
            (Region::Interval { a, .. }, Face::Left) => FaceFrame::point(vec![*a], vec![-1.0]),
            (Region::Interval { b, .. }, Face::Right) => FaceFrame::point(vec![*b], vec![1.0]),
            (Region::Rectangle { lo, hi }, f) => {
                let (origin, tangent, normal, length) = match f {
                    Face::Bottom => ([lo[0], lo[1]], [1.0, 0.0], [0.0, -1.0], hi[0] - lo[0]),
                    Face::Right => ([hi[0], lo[1]], [0.0, 1.0], [1.0, 0.0], hi[1] - lo[1]),
                    Face::Top => ([hi[0], hi[1]], [-1.0, 0.0], [0.0, 1.0], hi[0] - lo[0]),
                    Face::Left => ([lo[0], hi[1]], [0.0, -1.0], [-1.0, 0.0], hi[1] - lo[1]),
                    _ => return Err(bad()),
                };
                FaceFrame {
                    origin: origin.to_vec(),
                    tangent: Some(tangent.to_vec()),
                    normal: normal.to_vec(),
                    length,
                    curved: false,
                }
            }
            (Region::Disk { center, radius }, Face::Circle) => FaceFrame {
                origin: vec![center[0] + radius, center[1]],
                tangent: Some(vec![0.0, 1.0]),
                normal: vec![1.0, 0.0],
                length: 2.0 * std::f64::consts::PI * radius,
                curved: true,
            },
            _ => return Err(bad()),
        })
    }
}

/// A boundary face of a region. Rectangle faces are listed counterclockwise
/// starting at the bottom edge; each is parametrized by arc length in that
/// orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Face {
    Left,
    Right,
    Bottom,
    Top,
    Circle,
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Face::Left => "left",
            Face::Right => "right",
            Face::Bottom => "bottom",
            Face::Top => "top",
            Face::Circle => "circle",
        };
        f.write_str(s)
    }
}

/// Arc-length frame of a face. For 1D regions the face is a single point and
/// `tangent` is `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceFrame {
    pub origin: Vec<f64>,
    pub tangent: Option<Vec<f64>>,
    pub normal: Vec<f64>,
    pub length: f64,
    pub curved: bool,
}

impl FaceFrame {
    fn point(origin: Vec<f64>, normal: Vec<f64>) -> Self {
        FaceFrame {
            origin,
            tangent: None,
            normal,
            length: 0.0,
            curved: false,
        }
    }

    /// Point at arc length `t`.
    pub fn at(&self, t: f64) -> Vec<f64> {
        if self.curved {
            // circle: origin is (cx + R, cy)
            let r = self.length / (2.0 * std::f64::consts::PI);
            let c = [self.origin[0] - r, self.origin[1]];
            let th = t / r;
            return vec![c[0] + r * th.cos(), c[1] + r * th.sin()];
        }
        match &self.tangent {
            None => self.origin.clone(),
            Some(tau) => self.origin.iter().zip(tau).map(|(o, d)| o + t * d).collect(),
        }
    }

    /// Arc-length parameter of a point on the face.
    pub fn parameter(&self, x: &[f64]) -> f64 {
        if self.curved {
            let r = self.length / (2.0 * std::f64::consts::PI);
            let c = [self.origin[0] - r, self.origin[1]];
            let th = (x[1] - c[1]).atan2(x[0] - c[0]).rem_euclid(2.0 * std::f64::consts::PI);
            return th * r;
        }
        match &self.tangent {
            None => 0.0,
            Some(tau) => x.iter().zip(&self.origin).zip(tau).map(|((x, o), d)| (x - o) * d).sum(),
        }
    }

    /// Outward unit normal at `x` on the face.
    pub fn normal_at(&self, x: &[f64]) -> Vec<f64> {
        if self.curved {
            let r = self.length / (2.0 * std::f64::consts::PI);
            let c = [self.origin[0] - r, self.origin[1]];
            return vec![(x[0] - c[0]) / r, (x[1] - c[1]) / r];
        }
        self.normal.clone()
    }

    /// Unit tangent at `x` on the face.
    pub fn tangent_at(&self, x: &[f64]) -> Option<Vec<f64>> {
        if self.curved {
            let n = self.normal_at(x);
            return Some(vec![-n[1], n[0]]);
        }
        self.tangent.clone()
    }
}

/// The three pieces of a mixed boundary value problem: the interior, the
/// Dirichlet boundary and the Neumann boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentId {
    Interior,
    Dirichlet,
    Neumann,
}

impl ComponentId {
    pub const ALL: [ComponentId; 3] = [ComponentId::Interior, ComponentId::Dirichlet, ComponentId::Neumann];

    /// Component number `k ∈ {1, 2, 3}`.
    pub fn number(self) -> usize {
        match self {
            ComponentId::Interior => 1,
            ComponentId::Dirichlet => 2,
            ComponentId::Neumann => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ComponentId::Interior => "interior",
            ComponentId::Dirichlet => "dirichlet",
            ComponentId::Neumann => "neumann",
        }
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ComponentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(ComponentId::Interior),
            "dirichlet" => Ok(ComponentId::Dirichlet),
            "neumann" => Ok(ComponentId::Neumann),
            _ => Err(Error::Config(format!("unknown component `{s}`"))),
        }
    }
}

/// A region together with a partition of its boundary faces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub region: Region,
    pub dirichlet: Vec<Face>,
    #[serde(default)]
    pub neumann: Vec<Face>,
}

impl Domain {
    /// Validates the partition: disjoint, covering, Dirichlet part nonempty.
    pub fn new(region: Region, dirichlet: Vec<Face>, neumann: Vec<Face>) -> Result<Self> {
        let d = Domain {
            region,
            dirichlet,
            neumann,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let faces = self.region.faces();
        if self.dirichlet.is_empty() {
            return Err(Error::InvalidParameters("Dirichlet boundary must be nonempty".into()));
        }
        for f in self.dirichlet.iter().chain(&self.neumann) {
            if !faces.contains(f) {
                return Err(Error::InvalidParameters(format!("face {f} is not a face of the region")));
            }
        }
        for f in &self.dirichlet {
            if self.neumann.contains(f) {
                return Err(Error::InvalidParameters(format!("face {f} is both Dirichlet and Neumann")));
            }
        }
        for f in faces {
            if !self.dirichlet.contains(f) && !self.neumann.contains(f) {
                return Err(Error::InvalidParameters(format!("face {f} is not assigned")));
            }
        }
        if let Region::Interval { a, b } = self.region {
            if b <= a {
                return Err(Error::InvalidParameters("empty interval".into()));
            }
        }
        Ok(())
    }

    /// `(0,1)` with Dirichlet data at 0 and Neumann data at 1.
    pub fn unit_interval() -> Self {
        Domain {
            region: Region::Interval { a: 0.0, b: 1.0 },
            dirichlet: vec![Face::Left],
            neumann: vec![Face::Right],
        }
    }

    /// `(0,1)²` with Dirichlet data on bottom and left edges, Neumann on the rest.
    pub fn unit_square() -> Self {
        Domain {
            region: Region::Rectangle {
                lo: [0.0, 0.0],
                hi: [1.0, 1.0],
            },
            dirichlet: vec![Face::Bottom, Face::Left],
            neumann: vec![Face::Right, Face::Top],
        }
    }

    /// The interval `(-r, r)` (a ball in 1D), Dirichlet everywhere.
    pub fn ball_1d(center: f64, radius: f64) -> Self {
        Domain {
            region: Region::Interval {
                a: center - radius,
                b: center + radius,
            },
            dirichlet: vec![Face::Left, Face::Right],
            neumann: vec![],
        }
    }

    /// The disk `B(center, radius)`, Dirichlet everywhere.
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Domain {
            region: Region::Disk { center, radius },
            dirichlet: vec![Face::Circle],
            neumann: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    /// Faces making up a component, in canonical order. Empty for the interior.
    pub fn faces_of(&self, component: ComponentId) -> Vec<Face> {
        let sel: &[Face] = match component {
            ComponentId::Interior => return vec![],
            ComponentId::Dirichlet => &self.dirichlet,
            ComponentId::Neumann => &self.neumann,
        };
        self.region.faces().iter().copied().filter(|f| sel.contains(f)).collect()
    }

    /// Intrinsic dimension `n_k` of a component.
    pub fn component_dim(&self, component: ComponentId) -> usize {
        match component {
            ComponentId::Interior => self.dim(),
            _ => self.dim() - 1,
        }
    }

    /// Diameter of the component (maximum face length on the boundary).
    pub fn component_extent(&self, component: ComponentId) -> f64 {
        match component {
            ComponentId::Interior => self.region.diameter(),
            _ => self
                .faces_of(component)
                .iter()
                .filter_map(|f| self.region.face_frame(*f).ok())
                .map(|fr| fr.length)
                .fold(0.0, f64::max),
        }
    }

    /// Whether `x` lies in the closure of the component (on `face` for
    /// boundary components).
    pub fn on_component(&self, component: ComponentId, x: &[f64], face: Option<Face>) -> bool {
        if !self.region.contains(x) {
            return false;
        }
        match component {
            ComponentId::Interior => true,
            _ => {
                let Some(face) = face else { return false };
                if !self.faces_of(component).contains(&face) {
                    return false;
                }
                let Ok(frame) = self.region.face_frame(face) else { return false };
                let t = frame.parameter(x);
                let p = frame.at(t);
                let tol = 1e-9 * self.region.diameter().max(1.0);
                dist(&p, x) <= tol && t >= -tol && t <= frame.length + tol
            }
        }
    }
}

/// Node placement strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    UniformGrid,
    Halton,
    JitteredGrid,
}

/// Scattered nodes on one component of a domain with cached metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    component: ComponentId,
    dim: usize,
    coords: Vec<f64>,
    faces: Vec<Option<Face>>,
    fill: f64,
    separation: Option<f64>,
}

impl PointSet {
    /// Builds a set from explicit nodes, checking membership and measuring
    /// its fill and separation distances.
    pub fn new(dom: &Domain, component: ComponentId, nodes: Vec<Vec<f64>>, faces: Vec<Option<Face>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let dim = dom.dim();
        let faces = if faces.is_empty() { vec![None; nodes.len()] } else { faces };
        if faces.len() != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: faces.len(),
            });
        }
        let mut coords = Vec::with_capacity(nodes.len() * dim);
        for (x, f) in nodes.iter().zip(&faces) {
            if x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
            }
            if !dom.on_component(component, x, *f) {
                return Err(Error::NodeOutsideDomain(x.clone()));
            }
            coords.extend_from_slice(x);
        }
        let mut set = PointSet {
            component,
            dim,
            coords,
            faces,
            fill: 0.0,
            separation: None,
        };
        set.fill = fill_distance(&set, dom, default_resolution(dim))?;
        set.separation = if set.len() >= 2 { Some(separation_distance(&set)?) } else { None };
        Ok(set)
    }

    /// Interior set from a flat list of 1D coordinates.
    pub fn interval_nodes(dom: &Domain, xs: &[f64]) -> Result<Self> {
        PointSet::new(dom, ComponentId::Interior, xs.iter().map(|&x| vec![x]).collect(), vec![])
    }

    pub fn component(&self) -> ComponentId {
        self.component
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn face(&self, i: usize) -> Option<Face> {
        self.faces[i]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    /// Cached fill distance.
    pub fn fill_distance(&self) -> f64 {
        self.fill
    }

    /// Cached separation distance; `None` for a single node.
    pub fn separation_distance(&self) -> Option<f64> {
        self.separation
    }

    /// Fill over separation. `None` when either is degenerate (0-dimensional
    /// components or single nodes).
    pub fn mesh_ratio(&self) -> Option<f64> {
        match self.separation {
            Some(q) if self.fill > 0.0 => Some(self.fill / q),
            _ => None,
        }
    }

    /// Writes `component,x[,y]` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_csv_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_to<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let axes = ["x", "y", "z"];
        let mut header = vec!["component".to_string()];
        header.extend(axes[..self.dim].iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for p in self.points() {
            let mut rec = vec![self.component.name().to_string()];
            rec.extend(p.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        Ok(())
    }

    /// Reads a set written by [`PointSet::write_csv`]. Boundary faces are
    /// recovered from the domain geometry.
    pub fn read_csv(path: &Path, dom: &Domain) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut nodes = Vec::new();
        let mut component = None;
        for rec in r.records() {
            let rec = rec?;
            let c: ComponentId = rec.get(0).unwrap_or("").parse()?;
            if component.is_some_and(|k| k != c) {
                return Err(Error::Config("mixed components in one point set file".into()));
            }
            component = Some(c);
            let x: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>().map_err(|e| Error::Config(e.to_string())))
                .collect::<Result<_>>()?;
            nodes.push(x);
        }
        let component = component.ok_or(Error::EmptySampleSet)?;
        let faces = nodes
            .iter()
            .map(|x| {
                dom.faces_of(component)
                    .into_iter()
                    .find(|f| dom.on_component(component, x, Some(*f)))
            })
            .collect::<Vec<_>>();
        let faces = if component == ComponentId::Interior { vec![] } else { faces };
        PointSet::new(dom, component, nodes, faces)
    }
}

fn default_resolution(dim: usize) -> usize {
    if dim <= 1 {
        DEFAULT_RESOLUTION_1D
    } else {
        DEFAULT_RESOLUTION_2D
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest supported spatial dimension.
const MAX_DIM: usize = 2;

/// Uniform bucket grid for nearest-node queries.
struct NeighborGrid<'a> {
    set: &'a PointSet,
    lo: Vec<f64>,
    cell: f64,
    shape: Vec<usize>,
    buckets: Vec<Vec<u32>>,
}

impl<'a> NeighborGrid<'a> {
    fn new(set: &'a PointSet, extra_lo: &[f64], extra_hi: &[f64]) -> Self {
        let dim = set.dim;
        let mut lo = extra_lo.to_vec();
        let mut hi = extra_hi.to_vec();
        for p in set.points() {
            for i in 0..dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let vol: f64 = (0..dim).map(|i| (hi[i] - lo[i]).max(1e-12)).product();
        let cell = (vol / set.len() as f64).powf(1.0 / dim as f64).max(1e-12);
        let shape: Vec<usize> = (0..dim)
            .map(|i| (((hi[i] - lo[i]) / cell).floor() as usize + 1).min(1 << 20))
            .collect();
        let total: usize = shape.iter().product();
        let mut buckets = vec![Vec::new(); total];
        for (j, p) in set.points().enumerate() {
            let c = Self::cell_of(&lo, cell, &shape, p);
            buckets[Self::flat(&shape, &c[..dim])].push(j as u32);
        }
        NeighborGrid {
            set,
            lo,
            cell,
            shape,
            buckets,
        }
    }

    fn cell_of(lo: &[f64], cell: f64, shape: &[usize], p: &[f64]) -> [usize; MAX_DIM] {
        let mut c = [0; MAX_DIM];
        for i in 0..shape.len() {
            c[i] = (((p[i] - lo[i]) / cell).floor().max(0.0) as usize).min(shape[i] - 1);
        }
        c
    }

    fn flat(shape: &[usize], c: &[usize]) -> usize {
        c.iter().zip(shape).fold(0, |acc, (ci, si)| acc * si + ci)
    }

    /// Distance from `x` to the nearest node other than `skip`.
    fn nearest(&self, x: &[f64], skip: Option<usize>) -> f64 {
        let dim = self.set.dim;
        let c = Self::cell_of(&self.lo, self.cell, &self.shape, x);
        let max_ring = *self.shape.iter().max().unwrap_or(&1);
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            let r = ring as i64;
            let mut off = [-r; MAX_DIM];
            loop {
                if off[..dim].iter().any(|o| o.abs() == r) {
                    let mut cc = [0usize; MAX_DIM];
                    let inside = (0..dim).all(|i| {
                        let v = c[i] as i64 + off[i];
                        cc[i] = v.max(0) as usize;
                        v >= 0 && (v as usize) < self.shape[i]
                    });
                    if inside {
                        for &j in &self.buckets[Self::flat(&self.shape, &cc[..dim])] {
                            if Some(j as usize) == skip {
                                continue;
                            }
                            best = best.min(dist(x, self.set.point(j as usize)));
                        }
                    }
                }
                let mut i = 0;
                while i < dim {
                    off[i] += 1;
                    if off[i] > r {
                        off[i] = -r;
                        i += 1;
                    } else {
                        break;
                    }
                }
                if i == dim {
                    break;
                }
            }
            if best <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }
}

/// Probe spacing used by [`fill_distance`]; the returned value undershoots
/// the true fill distance by at most this amount.
pub fn probe_spacing(dom: &Domain, component: ComponentId, resolution: usize) -> f64 {
    match component {
        ComponentId::Interior => {
            let (lo, hi) = dom.region.bounding_box();
            let h = (0..lo.len()).map(|i| (hi[i] - lo[i]) / resolution as f64).fold(0.0, f64::max);
            0.5 * h * (lo.len() as f64).sqrt()
        }
        _ => 0.5 * dom.component_extent(component) / resolution as f64,
    }
}

/// Probe points, flattened with stride `dom.dim()`.
fn probes(dom: &Domain, component: ComponentId, resolution: usize) -> Vec<f64> {
    let mut out = Vec::new();
    match component {
        ComponentId::Interior => {
            let (lo, hi) = dom.region.bounding_box();
            let dim = lo.len();
            let n = resolution + 1;
            let total = n.pow(dim as u32);
            out.reserve(total * dim);
            let mut x = [0.0; MAX_DIM];
            for flat in 0..total {
                let mut rem = flat;
                for i in (0..dim).rev() {
                    let k = rem % n;
                    rem /= n;
                    x[i] = lo[i] + (hi[i] - lo[i]) * k as f64 / resolution as f64;
                }
                if dom.region.contains(&x[..dim]) {
                    out.extend_from_slice(&x[..dim]);
                }
            }
            if let Region::Disk { .. } = dom.region {
                let frame = dom.region.face_frame(Face::Circle).expect("disk face");
                let m = 4 * resolution;
                for k in 0..m {
                    out.extend(frame.at(frame.length * k as f64 / m as f64));
                }
            }
        }
        _ => {
            for face in dom.faces_of(component) {
                let frame = dom.region.face_frame(face).expect("face of own region");
                if frame.tangent.is_none() {
                    out.extend_from_slice(&frame.origin);
                    continue;
                }
                for k in 0..=resolution {
                    out.extend(frame.at(frame.length * k as f64 / resolution as f64));
                }
            }
        }
    }
    out
}

/// Fill distance `sup_{x ∈ component} min_{a ∈ A} |x - a|`, approximated
/// from below by a deterministic probe grid with `resolution` probes per
/// coordinate direction (per face for boundary components). The shortfall is
/// bounded by [`probe_spacing`]. Components of dimension zero have fill
/// distance 0.
pub fn fill_distance(set: &PointSet, dom: &Domain, resolution: usize) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    for (i, p) in set.points().enumerate() {
        if !dom.on_component(set.component, p, set.faces[i]) {
            return Err(Error::NodeOutsideDomain(p.to_vec()));
        }
    }
    if dom.component_dim(set.component) == 0 {
        return Ok(0.0);
    }
    let resolution = resolution.max(1);
    let probes = probes(dom, set.component, resolution);
    let (lo, hi) = dom.region.bounding_box();
    let grid = NeighborGrid::new(set, &lo, &hi);
    let fill = probes
        .par_chunks(dom.dim())
        .map(|x| grid.nearest(x, None))
        .reduce(|| 0.0, f64::max);
    Ok(fill)
}

/// Half the minimum pairwise node distance.
pub fn separation_distance(set: &PointSet) -> Result<f64> {
    if set.len() < 2 {
        return Err(Error::DegenerateSet);
    }
    let dim = set.dim;
    let grid = NeighborGrid::new(set, &vec![f64::INFINITY; dim], &vec![f64::NEG_INFINITY; dim]);
    let min = (0..set.len())
        .into_par_iter()
        .map(|i| grid.nearest(set.point(i), Some(i)))
        .reduce(|| f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::DegenerateSet);
    }
    Ok(0.5 * min)
}

/// Radical inverse of `k` in base `b`.
fn radical_inverse(mut k: u64, b: u64) -> f64 {
    let mut inv = 1.0 / b as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % b) as f64 * inv;
        k /= b;
        inv /= b as f64;
    }
    out
}

/// Generates a node set on a component with fill distance close to
/// `target_d`. Output is a deterministic function of the arguments.
pub fn generate_point_set(
    dom: &Domain,
    component: ComponentId,
    target_d: f64,
    strategy: Strategy,
    seed: u64,
) -> Result<PointSet> {
    dom.validate()?;
    if !(target_d > 0.0) {
        return Err(Error::InvalidParameters(format!("target fill distance {target_d} must be positive")));
    }
    let extent = dom.component_extent(component);
    if dom.component_dim(component) > 0 && target_d >= extent {
        return Err(Error::InvalidParameters(format!(
            "target fill distance {target_d} is not smaller than the component diameter {extent}"
        )));
    }
    let (nodes, faces) = match component {
        ComponentId::Interior => interior_nodes(dom, target_d, strategy, seed)?,
        _ => boundary_nodes(dom, component, target_d, strategy, seed)?,
    };
    let set = PointSet::new(dom, component, nodes, faces)?;
    if dom.component_dim(component) > 0 {
        let d = set.fill_distance();
        if d < 0.5 * target_d || d > 1.5 * target_d {
            return Err(Error::InvalidParameters(format!(
                "generated fill distance {d} outside [0.5, 1.5] x target {target_d}"
            )));
        }
    }
    Ok(set)
}

fn check_budget(required: usize) -> Result<()> {
    if required > MAX_NODES {
        return Err(Error::BudgetExceeded {
            required,
            cap: MAX_NODES,
        });
    }
    Ok(())
}

type Nodes = (Vec<Vec<f64>>, Vec<Option<Face>>);

fn interior_nodes(dom: &Domain, d: f64, strategy: Strategy, seed: u64) -> Result<Nodes> {
    let (lo, hi) = dom.region.bounding_box();
    let dim = lo.len();
    let sqrt_n = (dim as f64).sqrt();
    match strategy {
        Strategy::UniformGrid | Strategy::JitteredGrid => {
            // grid spacing g gives fill g·√n/2; jitter adds at most 0.25·g·√n
            let shrink = if strategy == Strategy::JitteredGrid { 1.3 } else { 1.0 };
            let g_target = 2.0 * d / sqrt_n / shrink;
            let counts: Vec<usize> = (0..dim)
                .map(|i| ((hi[i] - lo[i]) / g_target).ceil().max(1.0) as usize)
                .collect();
            let required: usize = counts.iter().map(|c| c + 1).product();
            check_budget(required)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(required);
            for flat in 0..required {
                let mut rem = flat;
                let mut x = vec![0.0; dim];
                let mut on_edge = vec![false; dim];
                for i in (0..dim).rev() {
                    let k = rem % (counts[i] + 1);
                    rem /= counts[i] + 1;
                    let g = (hi[i] - lo[i]) / counts[i] as f64;
                    x[i] = lo[i] + g * k as f64;
                    on_edge[i] = k == 0 || k == counts[i];
                }
                if strategy == Strategy::JitteredGrid {
                    for i in 0..dim {
                        let g = (hi[i] - lo[i]) / counts[i] as f64;
                        let j: f64 = rng.random_range(-0.25..=0.25);
                        if !on_edge[i] {
                            x[i] += j * g;
                        }
                    }
                }
                if dom.region.contains(&x) {
                    out.push(x);
                }
            }
            if let Region::Disk { .. } = dom.region {
                let frame = dom.region.face_frame(Face::Circle)?;
                let g = 2.0 * d / sqrt_n / shrink;
                let m = (frame.length / g).ceil() as usize;
                out.extend((0..m).map(|k| frame.at(frame.length * k as f64 / m as f64)));
            }
            Ok((out, vec![]))
        }
        Strategy::Halton => {
            let vol: f64 = (0..dim).map(|i| hi[i] - lo[i]).product();
            // Halton fill distance is roughly 1.5x that of a grid of equal size
            let mut n = ((vol / (2.0 * d / sqrt_n).powi(dim as i32)) * 1.5).ceil() as usize;
            let bases = [2u64, 3, 5];
            for _ in 0..60 {
                check_budget(n)?;
                let mut out: Vec<Vec<f64>> = Vec::with_capacity(n + 4);
                // always include the corners / endpoints of the bounding region
                match dom.region {
                    Region::Interval { a, b } => {
                        out.push(vec![a]);
                        out.push(vec![b]);
                    }
                    Region::Rectangle { lo, hi } => {
                        out.extend([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]].map(|p| p.to_vec()));
                    }
                    Region::Disk { .. } => {}
                }
                let mut k = seed + 1;
                while out.len() < n {
                    let x: Vec<f64> = (0..dim)
                        .map(|i| lo[i] + (hi[i] - lo[i]) * radical_inverse(k, bases[i]))
                        .collect();
                    k += 1;
                    if dom.region.contains(&x) {
                        out.push(x);
                    }
                }
                let trial = PointSet::new(dom, ComponentId::Interior, out.clone(), vec![])?;
                let f = trial.fill_distance();
                if f <= 1.4 * d && f >= 0.5 * d {
                    return Ok((out, vec![]));
                }
                if f < 0.5 * d {
                    n = (n as f64 / 1.2).ceil() as usize;
                } else {
                    n = (n as f64 * 1.2).ceil() as usize;
                }
            }
            Err(Error::InvalidParameters(format!("halton generation did not reach fill distance {d}")))
        }
    }
}

fn boundary_nodes(dom: &Domain, component: ComponentId, d: f64, strategy: Strategy, seed: u64) -> Result<Nodes> {
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    let mut faces = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let include_ends = component == ComponentId::Dirichlet;
    for face in dom.faces_of(component) {
        let frame = dom.region.face_frame(face)?;
        if frame.tangent.is_none() {
            nodes.push(frame.origin.clone());
            faces.push(Some(face));
            continue;
        }
        let len = frame.length;
        let cells = ((len / (2.0 * d)).ceil() as usize).max(1);
        check_budget(nodes.len() + cells + 1)?;
        let g = len / cells as f64;
        let params: Vec<f64> = if frame.curved {
            (0..cells).map(|k| k as f64 * g).collect()
        } else if include_ends {
            (0..=cells).map(|k| k as f64 * g).collect()
        } else {
            (0..cells).map(|k| (k as f64 + 0.5) * g).collect()
        };
        let last = params.len().saturating_sub(1);
        for (i, t) in params.iter().enumerate() {
            let fixed = include_ends && !frame.curved && (i == 0 || i == last);
            let t = match strategy {
                Strategy::UniformGrid => *t,
                Strategy::JitteredGrid if !fixed => t + rng.random_range(-0.25..=0.25) * g,
                Strategy::JitteredGrid => *t,
                Strategy::Halton if !fixed => {
                    // van der Corput offset inside the node's own cell
                    t + (radical_inverse(i as u64 + seed + 1, 2) - 0.5) * 0.5 * g
                }
                Strategy::Halton => *t,
            };
            let x = frame.at(t);
            if nodes.iter().any(|p| dist(p, &x) < 1e-12) {
                continue;
            }
            nodes.push(x);
            faces.push(Some(face));
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyTestSet(component.name()));
    }
    Ok((nodes, faces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Domain {
        Domain::unit_interval()
    }

    #[test]
    fn fill_distance_three_nodes() {
        let a = PointSet::interval_nodes(&unit(), &[0.0, 0.5, 1.0]).unwrap();
        assert!((fill_distance(&a, &unit(), 4096).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fill_distance_single_node() {
        let a = PointSet::interval_nodes(&unit(), &[0.5]).unwrap();
        assert!((a.fill_distance() - 0.5).abs() < 1e-12);
        assert!(a.separation_distance().is_none());
    }

    #[test]
    fn node_outside_domain_is_rejected() {
        let err = PointSet::interval_nodes(&unit(), &[0.2, 1.5]).unwrap_err();
        assert!(matches!(err, Error::NodeOutsideDomain(_)), "{err}");
        assert!(err.to_string().contains("node outside domain"));
    }

    #[test]
    fn empty_set_is_rejected() {
        let err = PointSet::interval_nodes(&unit(), &[]).unwrap_err();
        assert_eq!(err.to_string(), "empty sample set");
    }

    #[test]
    fn separation_examples() {
        let a = PointSet::interval_nodes(&unit(), &[0.0, 0.5, 1.0]).unwrap();
        assert!((separation_distance(&a).unwrap() - 0.25).abs() < 1e-15);
        let b = PointSet::interval_nodes(&unit(), &[0.0, 0.1, 1.0]).unwrap();
        assert!((separation_distance(&b).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn separation_of_square_grid_is_half_spacing() {
        let dom = Domain::unit_square();
        let k = 7;
        let h = 1.0 / k as f64;
        let nodes: Vec<Vec<f64>> = (0..k * k)
            .map(|i| vec![(i % k) as f64 * h + 0.5 * h, (i / k) as f64 * h + 0.5 * h])
            .collect();
        let a = PointSet::new(&dom, ComponentId::Interior, nodes, vec![]).unwrap();
        assert!((a.separation_distance().unwrap() - h / 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_separation() {
        let a = PointSet::interval_nodes(&unit(), &[0.3]).unwrap();
        assert_eq!(separation_distance(&a).unwrap_err().to_string(), "degenerate set: at least two distinct nodes are required");
    }

    #[test]
    fn uniform_interval_example() {
        let a = generate_point_set(&unit(), ComponentId::Interior, 0.25, Strategy::UniformGrid, 0).unwrap();
        let xs: Vec<f64> = a.points().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert!(a.fill_distance() <= 0.375);
    }

    #[test]
    fn boundary_of_interval_has_zero_fill() {
        let dom = unit();
        let b = generate_point_set(&dom, ComponentId::Dirichlet, 0.1, Strategy::UniformGrid, 0).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.point(0), &[0.0]);
        assert_eq!(b.fill_distance(), 0.0);
        let n = generate_point_set(&dom, ComponentId::Neumann, 0.1, Strategy::UniformGrid, 0).unwrap();
        assert_eq!(n.point(0), &[1.0]);
    }

    #[test]
    fn neumann_edges_exclude_corners() {
        let dom = Domain::unit_square();
        let n = generate_point_set(&dom, ComponentId::Neumann, 0.05, Strategy::UniformGrid, 0).unwrap();
        for p in n.points() {
            let corner = (p[0] == 0.0 || p[0] == 1.0) && (p[1] == 0.0 || p[1] == 1.0);
            assert!(!corner, "corner {p:?} assigned to Neumann");
        }
        let d = generate_point_set(&dom, ComponentId::Dirichlet, 0.05, Strategy::UniformGrid, 0).unwrap();
        assert!(d.points().any(|p| p == [0.0, 0.0]));
        assert!((d.fill_distance() - 0.05).abs() < 1e-3);
    }

    #[test]
    fn generators_are_deterministic() {
        let dom = Domain::unit_square();
        for s in [Strategy::Halton, Strategy::JitteredGrid] {
            let a = generate_point_set(&dom, ComponentId::Interior, 0.08, s, 7).unwrap();
            let b = generate_point_set(&dom, ComponentId::Interior, 0.08, s, 7).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let dom = Domain::unit_square();
        let err = generate_point_set(&dom, ComponentId::Interior, 1e-5, Strategy::UniformGrid, 0).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }), "{err}");
    }

    #[test]
    fn partition_validation() {
        let r = Region::Interval { a: 0.0, b: 1.0 };
        assert!(Domain::new(r.clone(), vec![], vec![Face::Left, Face::Right]).is_err());
        assert!(Domain::new(r.clone(), vec![Face::Left], vec![Face::Left, Face::Right]).is_err());
        assert!(Domain::new(r.clone(), vec![Face::Left], vec![]).is_err());
        assert!(Domain::new(r, vec![Face::Left, Face::Right], vec![]).is_ok());
    }

    #[test]
    fn csv_round_trip() {
        let dom = Domain::unit_square();
        let a = generate_point_set(&dom, ComponentId::Dirichlet, 0.1, Strategy::UniformGrid, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nodes.csv");
        a.write_csv(&path).unwrap();
        let b = PointSet::read_csv(&path, &dom).unwrap();
        assert_eq!(a.len(), b.len());
        assert_eq!(a.fill_distance(), b.fill_distance());
    }
}
