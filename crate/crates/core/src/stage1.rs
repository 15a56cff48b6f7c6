//! Regional selection: choose how many regions to build in, and which, so
//! that annual profit after land and infrastructure costs is maximal.
//!
//! For every `K` in `1..=k_max` a candidate set `Y_K` is produced (either by
//! exhaustive enumeration or a greedy per-region ranking), its gross profit is
//! adjusted by land cost `L_K` and infrastructure cost `I_K`, and the best `K`
//! under a strict-improvement rule wins.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economics::{build_region_plan, infra_cost_for_sites, land_cost_annual, EconomicParams, RegionPlan};
use crate::error::{Error, Result};
use crate::geodata::RegionRecord;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Rank regions by their stand-alone contribution and take the top `K`.
    Additive,
    /// Enumerate every `K`-subset of the candidate pool.
    #[default]
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Stage1Options {
    pub k_max: usize,
    pub mode: SearchMode,
    /// Exhaustive mode only considers this many regions with the largest surplus.
    pub prefilter: usize,
}

impl Default for Stage1Options {
    fn default() -> Self {
        Self {
            k_max: 5,
            mode: SearchMode::Exhaustive,
            prefilter: 20,
        }
    }
}

/// Candidate region set for one `K` before cost adjustment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet<T> {
    pub k: usize,
    /// Sorted region codes.
    pub regions: Vec<String>,
    pub plans: Vec<RegionPlan<T>>,
    /// Revenue minus depreciation (and energy cost, zero for surplus power).
    pub gross_profit_usd: T,
    pub total_mw: T,
}

/// One row of the profit-versus-K curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitRow<T> {
    pub k: usize,
    pub regions: Vec<String>,
    pub pi_orig_usd: T,
    pub land_cost_usd: T,
    pub infra_cost_usd: T,
    pub pi_adj_usd: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult<T> {
    pub k_star: usize,
    pub regions_star: Vec<String>,
    pub pi_max_usd: T,
    pub per_k_table: Vec<ProfitRow<T>>,
    /// Set when no region can host a single machine.
    pub infeasible: bool,
    pub warnings: Vec<String>,
}

impl<T: Scalar> SelectionResult<T> {
    pub fn plans_star<'a>(&self, plans: &'a [RegionPlan<T>]) -> Vec<&'a RegionPlan<T>> {
        plans
            .iter()
            .filter(|p| self.regions_star.contains(&p.region_code))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Adjusted<T> {
    pi_orig: T,
    land: T,
    infra: T,
    pi_adj: T,
}

fn gross_profit<T: Scalar>(plans: &[&RegionPlan<T>]) -> T {
    let revenue: T = plans.iter().map(|p| p.annual_revenue_usd).sum();
    let depreciation: T = plans.iter().map(|p| p.annual_depreciation_usd).sum();
    let energy: T = plans.iter().map(|p| p.annual_energy_cost_usd).sum();
    revenue - depreciation - energy
}

/// Adjusted profit of a set given per-region land costs, in the set's order.
fn evaluate<T: Scalar>(
    plans: &[&RegionPlan<T>],
    land_costs: impl Iterator<Item = T>,
    params: &EconomicParams<T>,
) -> Result<Adjusted<T>> {
    let pi_orig = gross_profit(plans);
    let land: T = land_costs.sum();
    let mws: Vec<T> = plans.iter().map(|p| p.power_mw).collect();
    let infra = infra_cost_for_sites(&mws, &params.cost)?;
    Ok(Adjusted {
        pi_orig,
        land,
        infra,
        pi_adj: pi_orig - (land + infra),
    })
}

fn evaluate_plans<T: Scalar>(plans: &[&RegionPlan<T>], params: &EconomicParams<T>) -> Result<Adjusted<T>> {
    evaluate(plans, plans.iter().map(|p| p.annual_land_cost_usd), params)
}

/// Applies land and infrastructure costs to a candidate set:
/// returns `(L_K, I_K, Π_adj)`.
pub fn adjust_profit<T: Scalar>(
    cset: &CandidateSet<T>,
    land_prices: &BTreeMap<String, T>,
    params: &EconomicParams<T>,
) -> Result<(T, T, T)> {
    if cset.k == 0 || cset.plans.is_empty() {
        return Err(Error::Domain("candidate set must hold at least one region".into()));
    }
    let refs: Vec<&RegionPlan<T>> = cset.plans.iter().collect();
    let land_costs = refs
        .iter()
        .map(|p| {
            let price = land_prices
                .get(&p.region_code)
                .ok_or_else(|| Error::Data(format!("no land price for region {}", p.region_code)))?;
            land_cost_annual(p.gross_area_m2, *price, &params.cost)
        })
        .collect::<Result<Vec<T>>>()?;
    let adj = evaluate(&refs, land_costs.into_iter(), params)?;
    Ok((adj.land, adj.infra, adj.pi_adj))
}

/// Plans for every region, sorted by region code.
pub fn plan_regions<T: Scalar>(regions: &[RegionRecord<T>], params: &EconomicParams<T>) -> Result<Vec<RegionPlan<T>>> {
    let mut plans = regions
        .iter()
        .map(|r| build_region_plan(r, params))
        .collect::<Result<Vec<_>>>()?;
    plans.sort_by(|a, b| a.region_code.cmp(&b.region_code));
    for w in plans.windows(2) {
        if w[0].region_code == w[1].region_code {
            return Err(Error::Validation(format!("duplicate region_code {}", w[0].region_code)));
        }
    }
    Ok(plans)
}

/// Indices (into code-sorted `plans`) of the `m` regions with the most
/// surplus-backed machines, returned in code order.
fn prefilter_pool<T: Scalar>(plans: &[RegionPlan<T>], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..plans.len()).collect();
    idx.sort_by(|&a, &b| {
        plans[b]
            .annual_energy_kwh
            .partial_cmp(&plans[a].annual_energy_kwh)
            .unwrap_or(Ordering::Equal)
            .then_with(|| plans[a].region_code.cmp(&plans[b].region_code))
    });
    idx.truncate(m);
    idx.sort_unstable();
    idx
}

/// Stand-alone annual contribution of one region with its share of
/// variable CAPEX, used by additive mode.
fn standalone_score<T: Scalar>(p: &RegionPlan<T>, params: &EconomicParams<T>) -> T {
    let c = &params.cost;
    p.gross_profit() - p.annual_land_cost_usd - p.power_mw * c.variable_capex_per_mw_usd / c.infra_lifetime_years
}

/// Lexicographic `k`-combinations of `0..n`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Higher adjusted profit first, then lexicographically smaller code list.
fn better<T: Scalar>(a: (T, &[String]), b: (T, &[String])) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) => false,
        _ => a.1 < b.1,
    }
}

fn candidate_from<T: Scalar>(plans: &[RegionPlan<T>], chosen: &[usize]) -> CandidateSet<T> {
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    let sel: Vec<RegionPlan<T>> = chosen.iter().map(|&i| plans[i].clone()).collect();
    let refs: Vec<&RegionPlan<T>> = sel.iter().collect();
    CandidateSet {
        k: sel.len(),
        regions: sel.iter().map(|p| p.region_code.clone()).collect(),
        gross_profit_usd: gross_profit(&refs),
        total_mw: sel.iter().map(|p| p.power_mw).sum(),
        plans: sel,
    }
}

fn best_subset<T: Scalar>(
    plans: &[RegionPlan<T>],
    pool: &[usize],
    k: usize,
    params: &EconomicParams<T>,
) -> Result<Vec<usize>> {
    let combos = combinations(pool.len(), k);
    let scored = combos
        .par_iter()
        .map(|c| {
            let refs: Vec<&RegionPlan<T>> = c.iter().map(|&i| &plans[pool[i]]).collect();
            evaluate_plans(&refs, params).map(|a| (a.pi_adj, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let codes = |c: &[usize]| {
        c.iter()
            .map(|&i| plans[pool[i]].region_code.clone())
            .collect::<Vec<_>>()
    };
    let mut best: Option<(T, &Vec<usize>, Vec<String>)> = None;
    for (v, c) in scored {
        let cc = codes(c);
        let replace = match &best {
            None => true,
            Some((bv, _, bc)) => better((v, &cc), (*bv, bc)),
        };
        if replace {
            best = Some((v, c, cc));
        }
    }
    let (_, c, _) = best.ok_or_else(|| Error::Domain(format!("no {k}-subset of {} regions", pool.len())))?;
    Ok(c.iter().map(|&i| pool[i]).collect())
}

fn additive_subset<T: Scalar>(plans: &[RegionPlan<T>], k: usize, params: &EconomicParams<T>) -> Vec<usize> {
    let scores: Vec<T> = plans.iter().map(|p| standalone_score(p, params)).collect();
    let mut idx: Vec<usize> = (0..plans.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| plans[a].region_code.cmp(&plans[b].region_code))
    });
    idx.truncate(k);
    idx
}

fn candidate_for_k<T: Scalar>(
    plans: &[RegionPlan<T>],
    pool: &[usize],
    k: usize,
    mode: SearchMode,
    params: &EconomicParams<T>,
) -> Result<CandidateSet<T>> {
    let chosen = match mode {
        SearchMode::Exhaustive => best_subset(plans, pool, k, params)?,
        SearchMode::Additive => additive_subset(plans, k, params),
    };
    Ok(candidate_from(plans, &chosen))
}

/// Picks `Y_K` for one `K`.
pub fn initial_optimize<T: Scalar>(
    regions: &[RegionRecord<T>],
    k: usize,
    params: &EconomicParams<T>,
    mode: SearchMode,
    prefilter: usize,
) -> Result<CandidateSet<T>> {
    let plans = plan_regions(regions, params)?;
    let pool = match mode {
        SearchMode::Exhaustive => prefilter_pool(&plans, prefilter),
        SearchMode::Additive => (0..plans.len()).collect(),
    };
    if k == 0 || k > pool.len() {
        return Err(Error::Domain(format!(
            "k = {k} must be in 1..={} (regions available to the search)",
            pool.len()
        )));
    }
    candidate_for_k(&plans, &pool, k, mode, params)
}

/// Runs the search for `K = 1..=k_max` and keeps the first `K` with the
/// largest adjusted profit.
pub fn select_optimal<T: Scalar>(
    regions: &[RegionRecord<T>],
    params: &EconomicParams<T>,
    opts: &Stage1Options,
) -> Result<SelectionResult<T>> {
    let plans = plan_regions(regions, params)?;
    select_from_plans(&plans, params, opts)
}

pub fn select_from_plans<T: Scalar>(
    plans: &[RegionPlan<T>],
    params: &EconomicParams<T>,
    opts: &Stage1Options,
) -> Result<SelectionResult<T>> {
    if opts.k_max == 0 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    if plans.is_empty() {
        return Err(Error::Domain("no regions to select from".into()));
    }
    let pool = match opts.mode {
        SearchMode::Exhaustive => prefilter_pool(plans, opts.prefilter.max(1)),
        SearchMode::Additive => (0..plans.len()).collect(),
    };
    let mut warnings = Vec::new();
    let k_max = opts.k_max.min(pool.len());
    if k_max < opts.k_max {
        warnings.push(format!("k_max {} capped at {k_max} candidate regions", opts.k_max));
    }
    let infeasible = plans.iter().all(|p| p.n_miners == 0);
    if infeasible {
        warnings.push("no region has enough surplus for a single machine".into());
    }

    let mut table = Vec::with_capacity(k_max);
    let mut best: Option<usize> = None;
    for k in 1..=k_max {
        let cset = candidate_for_k(plans, &pool, k, opts.mode, params)?;
        let refs: Vec<&RegionPlan<T>> = cset.plans.iter().collect();
        let adj = evaluate_plans(&refs, params)?;
        if !(adj.pi_adj - (adj.pi_orig - adj.land - adj.infra)).abs().is_finite() {
            return Err(Error::Invariant(format!("non-finite adjusted profit at K = {k}")));
        }
        table.push(ProfitRow {
            k,
            regions: cset.regions,
            pi_orig_usd: adj.pi_orig,
            land_cost_usd: adj.land,
            infra_cost_usd: adj.infra,
            pi_adj_usd: adj.pi_adj,
        });
        let improves = match best {
            None => true,
            Some(b) => adj.pi_adj > table[b].pi_adj_usd,
        };
        if improves {
            best = Some(table.len() - 1);
        }
    }
    let b = best.expect("k_max >= 1 yields at least one row");
    let row = &table[b];
    if row.pi_adj_usd < T::zero() {
        warnings.push(format!("maximum adjusted profit {} is negative", row.pi_adj_usd));
    }
    Ok(SelectionResult {
        k_star: row.k,
        regions_star: row.regions.clone(),
        pi_max_usd: row.pi_adj_usd,
        per_k_table: table,
        infeasible,
        warnings,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::economics::{CostParams, LayoutParams, MinerSpec, NetworkSnapshot};
    use crate::geodata::{MultiPolygon, Polygon};

    /// 1 kW machines earning $1,100 and depreciating $100 per year, land at
    /// $1M per region, $3M fixed OPEX and no CAPEX.
    pub(crate) fn trio_params() -> EconomicParams<f64> {
        EconomicParams {
            miner: MinerSpec {
                power_kw: 1.0,
                hashrate_ths: 1.0,
                capex_per_unit: 700.0,
                lifetime_years: 7.0,
            },
            network: NetworkSnapshot {
                network_hashrate_ths: 1.0,
                block_reward_btc: 1.0,
                btc_price_usd: 1_100.0,
                blocks_per_year: 1.0,
            },
            layout: LayoutParams::default(),
            cost: CostParams {
                market_multiplier: 1.0,
                land_amort_years: 1.0,
                fixed_capex_per_site_usd: 0.0,
                variable_capex_per_mw_usd: 0.0,
                grid_fee_usd: 0.0,
                fixed_opex_per_site_usd: 3_000_000.0,
                fx_krw_per_usd: 1.0,
                ..CostParams::default()
            },
        }
    }

    pub(crate) fn region(code: &str, surplus: f64, price: f64) -> RegionRecord<f64> {
        RegionRecord {
            region_code: code.into(),
            name: code.into(),
            annual_surplus_kwh: surplus,
            monthly_surplus_kwh: None,
            land_price: price,
            boundary: MultiPolygon::single(Polygon::rect(0.0, 0.0, 1.0, 1.0)),
        }
    }

    /// Gross profit {10, 8, 2} $M; land price chosen so each region's land
    /// cost is exactly $1M.
    pub(crate) fn trio() -> Vec<RegionRecord<f64>> {
        vec![
            region("A", 10_000.0 * 8_760.0, 40.0),
            region("B", 8_000.0 * 8_760.0, 50.0),
            region("C", 2_000.0 * 8_760.0, 200.0),
        ]
    }

    #[test]
    fn trio_plans() {
        let plans = plan_regions(&trio(), &trio_params()).unwrap();
        let gp: Vec<f64> = plans.iter().map(|p| p.gross_profit()).collect();
        assert_eq!(gp, vec![10e6, 8e6, 2e6]);
        assert!(plans.iter().all(|p| p.annual_land_cost_usd == 1e6));
    }

    #[test]
    fn trio_k2_both_modes() {
        for mode in [SearchMode::Additive, SearchMode::Exhaustive] {
            let c = initial_optimize(&trio(), 2, &trio_params(), mode, 20).unwrap();
            assert_eq!(c.regions, vec!["A", "B"]);
            assert_eq!(c.gross_profit_usd, 18e6);
        }
    }

    #[test]
    fn k_equals_n_takes_all() {
        let c = initial_optimize(&trio(), 3, &trio_params(), SearchMode::Exhaustive, 20).unwrap();
        assert_eq!(c.regions, vec!["A", "B", "C"]);
    }

    #[test]
    fn k_out_of_range() {
        assert!(matches!(
            initial_optimize(&trio(), 4, &trio_params(), SearchMode::Exhaustive, 20),
            Err(Error::Domain(_))
        ));
        assert!(initial_optimize(&trio(), 0, &trio_params(), SearchMode::Additive, 20).is_err());
    }

    #[test]
    fn trio_curve() {
        let opts = Stage1Options {
            k_max: 3,
            ..Default::default()
        };
        let r = select_optimal(&trio(), &trio_params(), &opts).unwrap();
        let curve: Vec<f64> = r.per_k_table.iter().map(|row| row.pi_adj_usd).collect();
        assert_eq!(curve, vec![6e6, 10e6, 8e6]);
        assert_eq!(r.k_star, 2);
        assert_eq!(r.pi_max_usd, 10e6);
        assert_eq!(r.regions_star, vec!["A", "B"]);
    }

    #[test]
    fn adjust_profit_defaults() {
        // two sites totalling 25 MW at default costs -> I_K = 9,371,428.57
        let params = EconomicParams::<f64>::default();
        let mut plans = vec![
            crate::economics::plan_for_miners("1", 3_000, 1.0, &params).unwrap(),
            crate::economics::plan_for_miners("2", 3_000, 1.0, &params).unwrap(),
        ];
        for p in &mut plans {
            p.power_mw = 12.5;
            p.gross_area_m2 = 12.5 * 2_500.0;
        }
        let mut cset = candidate_from(&plans, &[0, 1]);
        assert_eq!(cset.total_mw, 25.0);
        let prices = BTreeMap::from([("1".to_string(), 1.0), ("2".to_string(), 1.0)]);
        let (_, infra, _) = adjust_profit(&cset, &prices, &params).unwrap();
        assert!((infra - 9_371_428.571_428_57).abs() < 1e-6);
        let missing = BTreeMap::from([("1".to_string(), 1.0)]);
        assert!(matches!(adjust_profit(&cset, &missing, &params), Err(Error::Data(_))));
        cset.k = 0;
        cset.plans.clear();
        assert!(matches!(adjust_profit(&cset, &prices, &params), Err(Error::Domain(_))));
    }

    #[test]
    fn adjust_profit_subtracts() {
        let plans = plan_regions(&trio(), &trio_params()).unwrap();
        let cset = candidate_from(&plans, &[0, 1]);
        let prices = BTreeMap::from([("A".to_string(), 40.0), ("B".to_string(), 50.0)]);
        let (l, i, adj) = adjust_profit(&cset, &prices, &trio_params()).unwrap();
        assert_eq!((l, i, adj), (2e6, 6e6, 10e6));
    }

    #[test]
    fn single_region() {
        let opts = Stage1Options {
            k_max: 1,
            ..Default::default()
        };
        let r = select_optimal(&trio()[..1], &trio_params(), &opts).unwrap();
        assert_eq!((r.k_star, r.regions_star.clone()), (1, vec!["A".to_string()]));
        assert_eq!(r.per_k_table.len(), 1);
    }

    #[test]
    fn all_zero_surplus_is_flagged() {
        let regions = vec![region("A", 0.0, 10.0), region("B", 0.0, 10.0)];
        let r = select_optimal(&regions, &trio_params(), &Stage1Options::default()).unwrap();
        assert!(r.infeasible);
        assert_eq!(r.k_star, 1);
        assert!(r.pi_max_usd < 0.0);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn ties_prefer_smaller_k_then_codes() {
        // identical regions netting $4.5M each before fixed OPEX
        let regions = vec![
            region("B", 5_000.0 * 8_760.0, 40.0),
            region("A", 5_000.0 * 8_760.0, 40.0),
        ];
        let mut params = trio_params();
        params.cost.fixed_opex_per_site_usd = 0.0;
        let r = select_optimal(
            &regions,
            &params,
            &Stage1Options {
                k_max: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.regions_star, vec!["A"]);
        // OPEX eats the whole margin: K=1 and K=2 both reach 0, keep K=1
        params.cost.fixed_opex_per_site_usd = 4_500_000.0;
        let r = select_optimal(
            &regions,
            &params,
            &Stage1Options {
                k_max: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.per_k_table[0].pi_adj_usd, 0.0);
        assert_eq!(r.per_k_table[1].pi_adj_usd, 0.0);
        assert_eq!((r.k_star, r.regions_star.clone()), (1, vec!["A".to_string()]));
    }

    #[test]
    fn prefilter_limits_pool() {
        let regions: Vec<_> = (0..6)
            .map(|i| region(&format!("r{i}"), (i as f64 + 1.0) * 1e6 * 8_760.0 / 1e3, 1.0))
            .collect();
        let opts = Stage1Options {
            k_max: 5,
            mode: SearchMode::Exhaustive,
            prefilter: 3,
        };
        let r = select_optimal(&regions, &trio_params(), &opts).unwrap();
        assert_eq!(r.per_k_table.len(), 3);
        assert!(r
            .per_k_table
            .iter()
            .all(|row| row.regions.iter().all(|c| ["r3", "r4", "r5"].contains(&c.as_str()))));
    }

    #[test]
    fn combinations_enumerate() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(20, 5).len(), 15_504);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
    }
}
