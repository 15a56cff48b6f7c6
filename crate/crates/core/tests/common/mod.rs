#![allow(dead_code)]

use minesite::economics::{CostParams, EconomicParams, LayoutParams, MinerSpec, NetworkSnapshot};
use minesite::geodata::{MultiPolygon, Polygon, RegionRecord};

/// 1 kW machines netting $1,000/yr, unit land multipliers. With surplus in
/// whole MW-years every cost term stays an exact integer except the single
/// division by the infrastructure lifetime.
pub fn exact_params() -> EconomicParams<f64> {
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
            fx_krw_per_usd: 1.0,
            ..CostParams::default()
        },
    }
}

pub fn region(code: &str, mw: u32, price: f64) -> RegionRecord<f64> {
    RegionRecord {
        region_code: code.into(),
        name: code.into(),
        annual_surplus_kwh: mw as f64 * 1_000.0 * 8_760.0,
        monthly_surplus_kwh: None,
        land_price: price,
        boundary: MultiPolygon::single(Polygon::rect(0.0, 0.0, 1.0, 1.0)),
    }
}
