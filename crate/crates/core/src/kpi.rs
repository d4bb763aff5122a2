use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Offline KPI columns carried by profiles and rule matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kpi {
    /// Detection confidence.
    C,
    /// Model processing time per image.
    TauModel,
    /// System processing time per image (model time plus fixed overhead).
    TauSystem,
    /// CPU consumption, percent.
    SCpu,
    /// Detection box count.
    B,
}

impl Kpi {
    pub const ALL: [Kpi; 5] = [Kpi::C, Kpi::TauModel, Kpi::TauSystem, Kpi::SCpu, Kpi::B];

    pub fn name(self) -> &'static str {
        match self {
            Kpi::C => "c",
            Kpi::TauModel => "tau_model",
            Kpi::TauSystem => "tau_system",
            Kpi::SCpu => "s_cpu",
            Kpi::B => "b",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Kpi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kpi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kpi::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown KPI `{s}`")))
    }
}

/// One value per [`Kpi`], indexable by the enum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KpiValues<T = f64>(pub [T; 5]);

impl<T: Copy> KpiValues<T> {
    pub fn splat(v: T) -> Self {
        KpiValues([v; 5])
    }

    pub fn from_fn(mut f: impl FnMut(Kpi) -> T) -> Self {
        KpiValues(Kpi::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Kpi, T)> + '_ {
        Kpi::ALL.into_iter().map(move |k| (k, self.0[k.index()]))
    }
}

impl<T> Index<Kpi> for KpiValues<T> {
    type Output = T;

    fn index(&self, kpi: Kpi) -> &T {
        &self.0[kpi.index()]
    }
}

impl<T> IndexMut<Kpi> for KpiValues<T> {
    fn index_mut(&mut self, kpi: Kpi) -> &mut T {
        &mut self.0[kpi.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in Kpi::ALL {
            assert_eq!(k.name().parse::<Kpi>().unwrap(), k);
        }
        assert!("r".parse::<Kpi>().is_err());
    }
}
