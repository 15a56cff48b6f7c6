mod common;

use minesite::economics::{EconomicParams, GridFeeMode, RegionPlan};
use minesite::stage1::{plan_regions, select_optimal, SearchMode, SelectionResult, Stage1Options};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{exact_params, region};

struct Best {
    regions: Vec<String>,
    pi_adj: f64,
}

/// Brute force over every subset, best per size, then first size with the
/// strictly largest value.
fn brute_force(plans: &[RegionPlan<f64>], params: &EconomicParams<f64>, k_max: usize) -> (usize, Vec<Best>) {
    let c = &params.cost;
    let n = plans.len();
    let mut per_k: Vec<Option<Best>> = (0..=k_max).map(|_| None).collect();
    for mask in 1u32..(1 << n) {
        let k = mask.count_ones() as usize;
        if k > k_max {
            continue;
        }
        let members: Vec<&RegionPlan<f64>> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &plans[i]).collect();
        let revenue: f64 = members.iter().map(|p| p.annual_revenue_usd).sum();
        let dep: f64 = members.iter().map(|p| p.annual_depreciation_usd).sum();
        let energy: f64 = members.iter().map(|p| p.annual_energy_cost_usd).sum();
        let land: f64 = members.iter().map(|p| p.annual_land_cost_usd).sum();
        let mw: f64 = members.iter().map(|p| p.power_mw).sum();
        let blocks: f64 = match c.grid_fee_mode {
            GridFeeMode::Pooled => (mw / c.grid_block_mw).ceil(),
            GridFeeMode::PerSite => members.iter().map(|p| (p.power_mw / c.grid_block_mw).ceil()).sum(),
        };
        let kf = k as f64;
        let capex = kf * c.fixed_capex_per_site_usd + mw * c.variable_capex_per_mw_usd + blocks * c.grid_fee_usd;
        let infra = capex / c.infra_lifetime_years + kf * c.fixed_opex_per_site_usd;
        let pi = (revenue - dep - energy) - (land + infra);
        let codes: Vec<String> = members.iter().map(|p| p.region_code.clone()).collect();
        let replace = match &per_k[k] {
            None => true,
            Some(b) => pi > b.pi_adj || (pi == b.pi_adj && codes < b.regions),
        };
        if replace {
            per_k[k] = Some(Best {
                regions: codes,
                pi_adj: pi,
            });
        }
    }
    let rows: Vec<Best> = per_k.into_iter().flatten().collect();
    let mut k_star = 1;
    for (i, r) in rows.iter().enumerate() {
        if r.pi_adj > rows[k_star - 1].pi_adj {
            k_star = i + 1;
        }
    }
    (k_star, rows)
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<minesite::Region>, EconomicParams<f64>, usize) {
    let n = rng.gen_range(1..=12);
    let mut regions = Vec::new();
    for i in 0..n {
        let code = format!("R{i:02}");
        if i > 0 && rng.gen_bool(0.2) {
            // same economics as an earlier region: exercises tie-breaks
            let src: &minesite::Region = &regions[rng.gen_range(0..i)];
            let mut dup = src.clone();
            dup.region_code = code.clone();
            dup.name = code;
            regions.push(dup);
        } else {
            regions.push(region(&code, rng.gen_range(0..=25), rng.gen_range(1..=400) as f64));
        }
    }
    let mut params = exact_params();
    params.cost.fixed_opex_per_site_usd = rng.gen_range(0..=8) as f64 * 1e6;
    params.cost.fixed_capex_per_site_usd = rng.gen_range(0..=6) as f64 * 1e6;
    params.cost.grid_fee_mode = if rng.gen_bool(0.5) {
        GridFeeMode::Pooled
    } else {
        GridFeeMode::PerSite
    };
    let k_max = rng.gen_range(1..=n);
    (regions, params, k_max)
}

fn assert_matches(sel: &SelectionResult<f64>, k_star: usize, rows: &[Best]) {
    assert_eq!(sel.k_star, k_star);
    assert_eq!(sel.per_k_table.len(), rows.len());
    for (row, want) in sel.per_k_table.iter().zip(rows) {
        assert_eq!(row.regions, want.regions, "K = {}", row.k);
        assert_eq!(row.pi_adj_usd, want.pi_adj, "K = {}", row.k);
    }
    assert_eq!(sel.regions_star, rows[k_star - 1].regions);
    assert_eq!(sel.pi_max_usd, rows[k_star - 1].pi_adj);
}

#[test]
fn exhaustive_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (regions, params, k_max) = random_instance(&mut rng);
        let opts = Stage1Options {
            k_max,
            mode: SearchMode::Exhaustive,
            prefilter: 20,
        };
        let sel = select_optimal(&regions, &params, &opts).unwrap();
        let plans = plan_regions(&regions, &params).unwrap();
        let (k_star, rows) = brute_force(&plans, &params, k_max);
        assert_matches(&sel, k_star, &rows);
    }
}

#[test]
fn table_rows_are_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let (regions, params, k_max) = random_instance(&mut rng);
        for mode in [SearchMode::Exhaustive, SearchMode::Additive] {
            let sel = select_optimal(
                &regions,
                &params,
                &Stage1Options {
                    k_max,
                    mode,
                    prefilter: 20,
                },
            )
            .unwrap();
            for row in &sel.per_k_table {
                assert_eq!(
                    row.pi_adj_usd,
                    row.pi_orig_usd - (row.land_cost_usd + row.infra_cost_usd)
                );
                assert_eq!(row.regions.len(), row.k);
            }
            let max = sel
                .per_k_table
                .iter()
                .map(|r| r.pi_adj_usd)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(sel.pi_max_usd, max);
            assert_eq!(sel.regions_star.len(), sel.k_star);
        }
    }
}

#[test]
fn additive_agrees_when_nets_are_ordered() {
    // strictly ordered stand-alone nets, no grid fee steps
    let mut params = exact_params();
    params.cost.grid_fee_usd = 0.0;
    params.cost.fixed_opex_per_site_usd = 2e6;
    let regions: Vec<_> = (0..8)
        .map(|i| region(&format!("R{i}"), 3 + 2 * i, 10.0 + i as f64))
        .collect();
    for k_max in 1..=8 {
        let ex = select_optimal(
            &regions,
            &params,
            &Stage1Options {
                k_max,
                mode: SearchMode::Exhaustive,
                prefilter: 20,
            },
        )
        .unwrap();
        let add = select_optimal(
            &regions,
            &params,
            &Stage1Options {
                k_max,
                mode: SearchMode::Additive,
                prefilter: 20,
            },
        )
        .unwrap();
        assert_eq!(ex.per_k_table, add.per_k_table);
    }
}

fn scaled(params: &EconomicParams<f64>, c: f64) -> EconomicParams<f64> {
    let mut p = *params;
    p.network.btc_price_usd *= c;
    p.miner.capex_per_unit *= c;
    p.cost.fixed_capex_per_site_usd *= c;
    p.cost.variable_capex_per_mw_usd *= c;
    p.cost.grid_fee_usd *= c;
    p.cost.fixed_opex_per_site_usd *= c;
    p.cost.energy_price_usd_per_kwh *= c;
    // land cost is priced in KRW; a cheaper dollar scales it in USD
    p.cost.fx_krw_per_usd /= c;
    p
}

fn arb_regions() -> impl Strategy<Value = Vec<minesite::Region>> {
    prop::collection::vec((0u32..40, 1u32..2_000_000), 1..8).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (mw, price))| {
                let mut r = region(&format!("R{i}"), 0, price as f64);
                r.annual_surplus_kwh = mw as f64 * 2.437e6;
                r
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monetary_scaling(regions in arb_regions(), c in prop::sample::select(vec![0.5, 2.0, 4.0]), k_max in 1usize..6) {
        let params = EconomicParams::default();
        let opts = Stage1Options { k_max, ..Default::default() };
        let base = select_optimal(&regions, &params, &opts).unwrap();
        let s = select_optimal(&regions, &scaled(&params, c), &opts).unwrap();
        prop_assert_eq!(base.k_star, s.k_star);
        prop_assert_eq!(&base.regions_star, &s.regions_star);
        for (a, b) in base.per_k_table.iter().zip(&s.per_k_table) {
            prop_assert_eq!(&a.regions, &b.regions);
            prop_assert_eq!(a.pi_adj_usd * c, b.pi_adj_usd);
        }
    }

    #[test]
    fn more_surplus_keeps_region_selected(
        mws in prop::collection::vec(0u32..30, 2..9),
        prices in prop::collection::vec(1u32..300, 9),
        pick in any::<prop::sample::Index>(),
        extra in 1u32..20,
        opex in 0u32..6,
    ) {
        let mut params = exact_params();
        params.cost.grid_fee_usd = 0.0;
        params.cost.fixed_opex_per_site_usd = opex as f64 * 1e6;
        let regions: Vec<_> = mws.iter().enumerate().map(|(i, &mw)| region(&format!("R{i}"), mw, prices[i] as f64)).collect();
        let opts = Stage1Options { k_max: regions.len(), ..Default::default() };
        let before = select_optimal(&regions, &params, &opts).unwrap();
        let code = before.regions_star[pick.index(before.regions_star.len())].clone();
        let mut bumped = regions.clone();
        let j = bumped.iter().position(|r| r.region_code == code).unwrap();
        bumped[j].annual_surplus_kwh += extra as f64 * 1_000.0 * 8_760.0;
        let after = select_optimal(&bumped, &params, &opts).unwrap();
        prop_assert!(after.regions_star.contains(&code), "{code} dropped: {:?} -> {:?}", before.regions_star, after.regions_star);
    }
}
