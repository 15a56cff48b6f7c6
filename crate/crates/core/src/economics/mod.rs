//! Cost-benefit model: miner capacity, mining revenue, depreciation, land
//! cost, stepped infrastructure cost and energy cost.
//!
//! Land prices arrive in KRW/m²; every other monetary quantity is USD. The
//! exchange rate is applied exactly once, in [`land_cost_annual`].

mod params;

use serde::{Deserialize, Serialize};

pub use params::{
    CostParams, EconomicParams, GridFeeMode, LayoutParams, MinerSpec, NetworkSnapshot, DEFAULT_REVENUE_PER_MACHINE_USD,
};

use crate::error::{Error, Result};
use crate::geodata::RegionRecord;
use crate::scalar::Scalar;

pub const HOURS_PER_YEAR: f64 = 8_760.0;

/// Ratios this close to an integer are treated as that integer so decimal
/// inputs such as a 4.104 kW rating do not lose a unit to representation error.
const SNAP_REL: f64 = 1e-9;

fn snapped<T: Scalar>(q: T) -> Option<T> {
    let n = q.round();
    ((q - n).abs() <= T::lit(SNAP_REL) * q.abs().max(T::one())).then_some(n)
}

pub(crate) fn snap_floor<T: Scalar>(q: T) -> T {
    snapped(q).unwrap_or_else(|| q.floor())
}

pub(crate) fn snap_ceil<T: Scalar>(q: T) -> T {
    snapped(q).unwrap_or_else(|| q.ceil())
}

fn to_count<T: Scalar>(v: T) -> u64 {
    v.to_u64().unwrap_or(0)
}

/// Machines that surplus energy can run all year: `floor(E / (P * 8760))`.
pub fn miner_capacity<T: Scalar>(annual_surplus_kwh: T, miner: &MinerSpec<T>) -> u64 {
    if !(annual_surplus_kwh > T::zero()) {
        return 0;
    }
    let per_machine = miner.power_kw * T::lit(HOURS_PER_YEAR);
    to_count(snap_floor(annual_surplus_kwh / per_machine))
}

/// Expected block-reward income of one machine per year, USD.
pub fn revenue_per_machine<T: Scalar>(miner: &MinerSpec<T>, net: &NetworkSnapshot<T>) -> Result<T> {
    if !(net.network_hashrate_ths > T::zero()) {
        return Err(Error::Domain(format!(
            "network hashrate {} must be positive",
            net.network_hashrate_ths
        )));
    }
    let share = miner.hashrate_ths / net.network_hashrate_ths;
    Ok(share * net.blocks_per_year * net.block_reward_btc * net.btc_price_usd)
}

pub fn annual_revenue<T: Scalar>(n_miners: u64, miner: &MinerSpec<T>, net: &NetworkSnapshot<T>) -> Result<T> {
    Ok(T::from_count(n_miners) * revenue_per_machine(miner, net)?)
}

/// Straight-line hardware depreciation, USD/year.
pub fn annual_depreciation<T: Scalar>(n_miners: u64, miner: &MinerSpec<T>) -> T {
    T::from_count(n_miners) * (miner.capex_per_unit / miner.lifetime_years)
}

/// Containers needed for `n_miners` and their footprint including layout margin, m².
pub fn required_net_area<T: Scalar>(n_miners: u64, layout: &LayoutParams<T>) -> (u64, T) {
    let per = u64::from(layout.miners_per_container);
    let containers = n_miners.div_ceil(per);
    let area = T::from_count(containers) * layout.area_per_container_m2 * (T::one() + layout.margin_ratio);
    (containers, area)
}

/// Land footprint charged in the regional cost model, m².
pub fn gross_area<T: Scalar>(power_mw: T, layout: &LayoutParams<T>) -> T {
    power_mw * layout.gross_area_m2_per_mw
}

/// `A * P * M_market / L_amort`, converted from KRW to USD.
pub fn land_cost_annual<T: Scalar>(gross_area_m2: T, land_price_krw_m2: T, cost: &CostParams<T>) -> Result<T> {
    if !(cost.fx_krw_per_usd > T::zero()) {
        return Err(Error::Config(format!(
            "cost.fx_krw_per_usd = {}: must be > 0",
            cost.fx_krw_per_usd
        )));
    }
    let krw = gross_area_m2 * land_price_krw_m2 * cost.market_multiplier / cost.land_amort_years;
    Ok(krw / cost.fx_krw_per_usd)
}

/// Number of grid-connection blocks for `mw` of capacity.
pub fn grid_blocks<T: Scalar>(mw: T, cost: &CostParams<T>) -> u64 {
    if !(mw > T::zero()) {
        return 0;
    }
    to_count(snap_ceil(mw / cost.grid_block_mw))
}

/// Stepped grid-connection fee for `mw` of capacity, USD (one-off).
pub fn grid_fee<T: Scalar>(mw: T, cost: &CostParams<T>) -> T {
    T::from_count(grid_blocks(mw, cost)) * cost.grid_fee_usd
}

fn check_sites(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("infrastructure cost needs at least one site".into()));
    }
    Ok(())
}

/// Total installation cost `C_capex(MW, K)` with a pooled grid fee, USD.
pub fn capex_total<T: Scalar>(total_mw: T, k_sites: usize, cost: &CostParams<T>) -> Result<T> {
    check_sites(k_sites)?;
    Ok(T::from_count(k_sites as u64) * cost.fixed_capex_per_site_usd
        + total_mw * cost.variable_capex_per_mw_usd
        + grid_fee(total_mw, cost))
}

/// `C_capex(MW, K) / Y_infra + K * O_fixed` with the grid fee on pooled capacity.
pub fn infra_cost_annual<T: Scalar>(total_mw: T, k_sites: usize, cost: &CostParams<T>) -> Result<T> {
    let capex = capex_total(total_mw, k_sites, cost)?;
    Ok(capex / cost.infra_lifetime_years + T::from_count(k_sites as u64) * cost.fixed_opex_per_site_usd)
}

/// Annual infrastructure cost of a concrete site list, honoring
/// [`CostParams::grid_fee_mode`].
pub fn infra_cost_for_sites<T: Scalar>(site_mw: &[T], cost: &CostParams<T>) -> Result<T> {
    check_sites(site_mw.len())?;
    let total: T = site_mw.iter().copied().sum();
    match cost.grid_fee_mode {
        GridFeeMode::Pooled => infra_cost_annual(total, site_mw.len(), cost),
        GridFeeMode::PerSite => {
            let k = T::from_count(site_mw.len() as u64);
            let fees: T = site_mw.iter().map(|&mw| grid_fee(mw, cost)).sum();
            let capex = k * cost.fixed_capex_per_site_usd + total * cost.variable_capex_per_mw_usd + fees;
            Ok(capex / cost.infra_lifetime_years + k * cost.fixed_opex_per_site_usd)
        }
    }
}

pub fn energy_cost_annual<T: Scalar>(annual_energy_kwh: T, cost: &CostParams<T>) -> T {
    annual_energy_kwh * cost.energy_price_usd_per_kwh
}

/// Economics of deploying miners in one region. Monetary fields are USD/year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPlan<T> {
    pub region_code: String,
    pub n_miners: u64,
    pub containers: u64,
    pub power_mw: T,
    pub annual_energy_kwh: T,
    pub annual_revenue_usd: T,
    pub annual_depreciation_usd: T,
    pub annual_land_cost_usd: T,
    pub annual_energy_cost_usd: T,
    pub net_area_m2: T,
    pub gross_area_m2: T,
}

impl<T: Scalar> RegionPlan<T> {
    /// Revenue minus depreciation and energy cost.
    pub fn gross_profit(&self) -> T {
        self.annual_revenue_usd - self.annual_depreciation_usd - self.annual_energy_cost_usd
    }
}

/// Plan for a fixed machine count.
pub fn plan_for_miners<T: Scalar>(
    region_code: &str,
    n_miners: u64,
    land_price_krw_m2: T,
    params: &EconomicParams<T>,
) -> Result<RegionPlan<T>> {
    let miner = &params.miner;
    let n = T::from_count(n_miners);
    let power_mw = n * miner.power_kw / T::lit(1_000.0);
    let annual_energy_kwh = n * miner.power_kw * T::lit(HOURS_PER_YEAR);
    let gross = gross_area(power_mw, &params.layout);
    let (containers, net_area_m2) = required_net_area(n_miners, &params.layout);
    Ok(RegionPlan {
        region_code: region_code.to_string(),
        n_miners,
        containers,
        power_mw,
        annual_energy_kwh,
        annual_revenue_usd: annual_revenue(n_miners, miner, &params.network)?,
        annual_depreciation_usd: annual_depreciation(n_miners, miner),
        annual_land_cost_usd: land_cost_annual(gross, land_price_krw_m2, &params.cost)?,
        annual_energy_cost_usd: energy_cost_annual(annual_energy_kwh, &params.cost),
        net_area_m2,
        gross_area_m2: gross,
    })
}

pub fn build_region_plan<T: Scalar>(region: &RegionRecord<T>, params: &EconomicParams<T>) -> Result<RegionPlan<T>> {
    let n = miner_capacity(region.annual_surplus_kwh, &params.miner);
    plan_for_miners(&region.region_code, n, region.land_price, params)
}
