use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ids::{NavPoint, RoleId};

/// View counters keyed by navigation point and viewer role.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViewStats {
    counts: BTreeMap<(NavPoint, RoleId), u64>,
}

impl ViewStats {
    pub fn record(&mut self, nav: NavPoint, role: RoleId) {
        *self.counts.entry((nav, role)).or_default() += 1;
    }

    pub fn report(&self) -> StatsReport {
        let rows = self
            .counts
            .iter()
            .map(|((nav, role), &views)| StatsRow {
                nav_point: nav.clone(),
                role: role.clone(),
                views,
            })
            .collect();
        let mut per_nav: BTreeMap<&NavPoint, u64> = BTreeMap::new();
        for ((nav, _), views) in &self.counts {
            *per_nav.entry(nav).or_default() += views;
        }
        let totals = per_nav
            .into_iter()
            .map(|(nav, views)| NavTotal {
                nav_point: nav.clone(),
                views,
            })
            .collect();
        StatsReport {
            rows,
            totals,
            total: self.counts.values().sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub nav_point: NavPoint,
    pub role: RoleId,
    pub views: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavTotal {
    pub nav_point: NavPoint,
    pub views: u64,
}

/// Rows sorted by navigation point then role, per-point totals, and the
/// grand total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub rows: Vec<StatsRow>,
    pub totals: Vec<NavTotal>,
    pub total: u64,
}

impl StatsReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}
