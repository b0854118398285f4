use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_len, Error, Result};
use crate::gp::EncodedPoint;

/// One value per search-space dimension; ordering is lexicographic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperPoint(pub Vec<usize>);

impl fmt::Display for HyperPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub grid: Vec<usize>,
}

/// Ordered named dimensions, each a finite strictly ascending grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Dimension>", into = "Vec<Dimension>")]
pub struct SearchSpace {
    dims: Vec<Dimension>,
}

impl TryFrom<Vec<Dimension>> for SearchSpace {
    type Error = Error;

    fn try_from(dims: Vec<Dimension>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<SearchSpace> for Vec<Dimension> {
    fn from(s: SearchSpace) -> Self {
        s.dims
    }
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Config("search space needs at least one dimension".into()));
        }
        for d in &dims {
            if d.grid.is_empty() {
                return Err(Error::Config(format!("dimension {} has an empty grid", d.name)));
            }
            if d.grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!("grid of {} must be strictly ascending", d.name)));
            }
        }
        Ok(Self { dims })
    }

    pub fn from_grids(grids: &[(&str, &[usize])]) -> Result<Self> {
        Self::new(
            grids
                .iter()
                .map(|(name, grid)| Dimension {
                    name: name.to_string(),
                    grid: grid.to_vec(),
                })
                .collect(),
        )
    }

    /// `n ∈ {1..4}; k0, k1, l ∈ {3, 5, 7}`.
    pub fn forward() -> Self {
        Self::from_grids(&[("n", &[1, 2, 3, 4]), ("k0", &[3, 5, 7]), ("k1", &[3, 5, 7]), ("l", &[3, 5, 7])])
            .expect("static grid")
    }

    /// `n ∈ {1..5}; k0, k1 ∈ {3, 5, 7}`.
    pub fn inverse() -> Self {
        Self::from_grids(&[("n", &[1, 2, 3, 4, 5]), ("k0", &[3, 5, 7]), ("k1", &[3, 5, 7])]).expect("static grid")
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn names(&self) -> Vec<&str> {
        self.dims.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn cardinality(&self) -> usize {
        self.dims.iter().map(|d| d.grid.len()).product()
    }

    /// Cartesian product in lexicographic order.
    pub fn enumerate(&self) -> Vec<HyperPoint> {
        let mut out = vec![Vec::with_capacity(self.dims.len())];
        for d in &self.dims {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    d.grid.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(HyperPoint).collect()
    }

    pub fn contains(&self, point: &HyperPoint) -> bool {
        point.0.len() == self.dims.len() && self.dims.iter().zip(&point.0).all(|(d, v)| d.grid.contains(v))
    }

    /// Per-dimension min-max normalization to `[0, 1]` over the grid bounds
    /// (a single-value grid maps to 0).
    pub fn encode(&self, point: &HyperPoint) -> Result<EncodedPoint> {
        check_len("hyperparameter point", self.dims.len(), point.0.len())?;
        let coords = self
            .dims
            .iter()
            .zip(&point.0)
            .map(|(d, &v)| {
                let lo = d.grid[0] as f64;
                let hi = *d.grid.last().unwrap() as f64;
                if hi > lo {
                    ((v as f64 - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();
        EncodedPoint::new(coords)
    }

    pub fn named(&self, point: &HyperPoint) -> NamedPoint {
        NamedPoint(self.names().into_iter().map(String::from).zip(point.0.iter().copied()).collect())
    }

    pub fn point_from_named(&self, named: &NamedPoint) -> Result<HyperPoint> {
        check_len("named hyperparameter set", self.dims.len(), named.0.len())?;
        self.dims
            .iter()
            .map(|d| {
                named
                    .get(&d.name)
                    .ok_or_else(|| Error::Config(format!("hyperparameter set lacks {}", d.name)))
            })
            .collect::<Result<Vec<_>>>()
            .map(HyperPoint)
    }
}

/// Hyperparameter set keyed by dimension name, serialized as an ordered JSON
/// object such as `{"n":1,"k0":3,"k1":3,"l":3}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedPoint(pub Vec<(String, usize)>);

impl NamedPoint {
    pub fn get(&self, name: &str) -> Option<usize> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

impl Serialize for NamedPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for NamedPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = NamedPoint;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of hyperparameter names to integers")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> std::result::Result<NamedPoint, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = m.next_entry::<String, usize>()? {
                    out.push((k, v));
                }
                Ok(NamedPoint(out))
            }
        }
        d.deserialize_map(V)
    }
}
