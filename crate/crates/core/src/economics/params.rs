use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct MinerSpec<T> {
    /// Continuous electrical draw per machine, kW.
    pub power_kw: T,
    pub hashrate_ths: T,
    /// Purchase price per machine, USD.
    pub capex_per_unit: T,
    pub lifetime_years: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct NetworkSnapshot<T> {
    pub network_hashrate_ths: T,
    pub block_reward_btc: T,
    pub btc_price_usd: T,
    pub blocks_per_year: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct LayoutParams<T> {
    pub miners_per_container: u32,
    pub area_per_container_m2: T,
    pub margin_ratio: T,
    pub gross_area_m2_per_mw: T,
}

/// How the stepped grid-connection fee is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFeeMode {
    /// One step schedule over the combined capacity of all selected sites.
    #[default]
    Pooled,
    /// Each site pays its own steps.
    PerSite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct CostParams<T> {
    pub market_multiplier: T,
    pub land_amort_years: T,
    pub fixed_capex_per_site_usd: T,
    pub variable_capex_per_mw_usd: T,
    pub grid_fee_usd: T,
    pub grid_block_mw: T,
    pub grid_fee_mode: GridFeeMode,
    pub infra_lifetime_years: T,
    pub fixed_opex_per_site_usd: T,
    pub energy_price_usd_per_kwh: T,
    pub fx_krw_per_usd: T,
}

/// Every monetary and layout constant of the cost-benefit model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct EconomicParams<T> {
    pub miner: MinerSpec<T>,
    pub network: NetworkSnapshot<T>,
    pub layout: LayoutParams<T>,
    pub cost: CostParams<T>,
}

/// Per-machine annual revenue the default network snapshot is calibrated to, USD.
pub const DEFAULT_REVENUE_PER_MACHINE_USD: f64 = 8_944.0;

impl<T: Scalar> Default for MinerSpec<T> {
    fn default() -> Self {
        Self {
            power_kw: T::lit(4.104),
            hashrate_ths: T::lit(473.0),
            capex_per_unit: T::lit(9_490.0),
            lifetime_years: T::lit(7.0),
        }
    }
}

impl<T: Scalar> NetworkSnapshot<T> {
    /// Snapshot whose BTC price is solved so that one `miner` earns
    /// `revenue_per_machine` USD per year at the given network state.
    pub fn calibrated(
        miner: &MinerSpec<T>,
        revenue_per_machine: T,
        network_hashrate_ths: T,
        block_reward_btc: T,
        blocks_per_year: T,
    ) -> Self {
        let btc_per_year = miner.hashrate_ths / network_hashrate_ths * blocks_per_year * block_reward_btc;
        Self {
            network_hashrate_ths,
            block_reward_btc,
            btc_price_usd: revenue_per_machine / btc_per_year,
            blocks_per_year,
        }
    }
}

impl<T: Scalar> Default for NetworkSnapshot<T> {
    fn default() -> Self {
        Self::calibrated(
            &MinerSpec::default(),
            T::lit(DEFAULT_REVENUE_PER_MACHINE_USD),
            T::lit(6.0e8),
            T::lit(3.125),
            T::lit(52_560.0),
        )
    }
}

impl<T: Scalar> Default for LayoutParams<T> {
    fn default() -> Self {
        Self {
            miners_per_container: 210,
            area_per_container_m2: T::lit(51.7),
            margin_ratio: T::lit(0.30),
            gross_area_m2_per_mw: T::lit(2_500.0),
        }
    }
}

impl<T: Scalar> Default for CostParams<T> {
    fn default() -> Self {
        Self {
            market_multiplier: T::lit(1.3),
            land_amort_years: T::lit(20.0),
            fixed_capex_per_site_usd: T::lit(5_000_000.0),
            variable_capex_per_mw_usd: T::lit(400_000.0),
            grid_fee_usd: T::lit(1_200_000.0),
            grid_block_mw: T::lit(10.0),
            grid_fee_mode: GridFeeMode::Pooled,
            infra_lifetime_years: T::lit(7.0),
            fixed_opex_per_site_usd: T::lit(3_000_000.0),
            energy_price_usd_per_kwh: T::zero(),
            fx_krw_per_usd: T::lit(1_350.0),
        }
    }
}

impl<T: Scalar> Default for EconomicParams<T> {
    fn default() -> Self {
        Self {
            miner: MinerSpec::default(),
            network: NetworkSnapshot::default(),
            layout: LayoutParams::default(),
            cost: CostParams::default(),
        }
    }
}

fn check<T: Scalar>(ok: bool, field: &str, value: T, rule: &str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{field} = {value}: must be {rule}")))
    }
}

impl<T: Scalar> EconomicParams<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let one = T::one();
        let m = &self.miner;
        check(m.power_kw > z, "miner.power_kw", m.power_kw, "> 0")?;
        check(m.hashrate_ths > z, "miner.hashrate_ths", m.hashrate_ths, "> 0")?;
        check(m.capex_per_unit > z, "miner.capex_per_unit", m.capex_per_unit, "> 0")?;
        check(m.lifetime_years > z, "miner.lifetime_years", m.lifetime_years, "> 0")?;
        let n = &self.network;
        check(
            n.network_hashrate_ths > z,
            "network.network_hashrate_ths",
            n.network_hashrate_ths,
            "> 0",
        )?;
        check(
            n.block_reward_btc > z,
            "network.block_reward_btc",
            n.block_reward_btc,
            "> 0",
        )?;
        check(n.btc_price_usd > z, "network.btc_price_usd", n.btc_price_usd, "> 0")?;
        check(
            n.blocks_per_year > z,
            "network.blocks_per_year",
            n.blocks_per_year,
            "> 0",
        )?;
        let l = &self.layout;
        if l.miners_per_container == 0 {
            return Err(Error::Config("layout.miners_per_container = 0: must be > 0".into()));
        }
        check(
            l.area_per_container_m2 > z,
            "layout.area_per_container_m2",
            l.area_per_container_m2,
            "> 0",
        )?;
        check(
            l.margin_ratio >= z && l.margin_ratio < one,
            "layout.margin_ratio",
            l.margin_ratio,
            "in [0, 1)",
        )?;
        check(
            l.gross_area_m2_per_mw > z,
            "layout.gross_area_m2_per_mw",
            l.gross_area_m2_per_mw,
            "> 0",
        )?;
        let c = &self.cost;
        check(
            c.market_multiplier >= one,
            "cost.market_multiplier",
            c.market_multiplier,
            ">= 1",
        )?;
        check(
            c.land_amort_years >= one,
            "cost.land_amort_years",
            c.land_amort_years,
            ">= 1",
        )?;
        check(
            c.infra_lifetime_years >= one,
            "cost.infra_lifetime_years",
            c.infra_lifetime_years,
            ">= 1",
        )?;
        check(
            c.fixed_capex_per_site_usd >= z,
            "cost.fixed_capex_per_site_usd",
            c.fixed_capex_per_site_usd,
            ">= 0",
        )?;
        check(
            c.variable_capex_per_mw_usd >= z,
            "cost.variable_capex_per_mw_usd",
            c.variable_capex_per_mw_usd,
            ">= 0",
        )?;
        check(c.grid_fee_usd >= z, "cost.grid_fee_usd", c.grid_fee_usd, ">= 0")?;
        check(c.grid_block_mw > z, "cost.grid_block_mw", c.grid_block_mw, "> 0")?;
        check(
            c.fixed_opex_per_site_usd >= z,
            "cost.fixed_opex_per_site_usd",
            c.fixed_opex_per_site_usd,
            ">= 0",
        )?;
        check(
            c.energy_price_usd_per_kwh >= z,
            "cost.energy_price_usd_per_kwh",
            c.energy_price_usd_per_kwh,
            ">= 0",
        )?;
        check(c.fx_krw_per_usd > z, "cost.fx_krw_per_usd", c.fx_krw_per_usd, "> 0")?;
        Ok(())
    }

    /// Converts every field to another scalar type.
    pub fn cast<U: Scalar>(&self) -> EconomicParams<U> {
        let c = |v: T| U::lit(v.as_f64());
        EconomicParams {
            miner: MinerSpec {
                power_kw: c(self.miner.power_kw),
                hashrate_ths: c(self.miner.hashrate_ths),
                capex_per_unit: c(self.miner.capex_per_unit),
                lifetime_years: c(self.miner.lifetime_years),
            },
            network: NetworkSnapshot {
                network_hashrate_ths: c(self.network.network_hashrate_ths),
                block_reward_btc: c(self.network.block_reward_btc),
                btc_price_usd: c(self.network.btc_price_usd),
                blocks_per_year: c(self.network.blocks_per_year),
            },
            layout: LayoutParams {
                miners_per_container: self.layout.miners_per_container,
                area_per_container_m2: c(self.layout.area_per_container_m2),
                margin_ratio: c(self.layout.margin_ratio),
                gross_area_m2_per_mw: c(self.layout.gross_area_m2_per_mw),
            },
            cost: CostParams {
                market_multiplier: c(self.cost.market_multiplier),
                land_amort_years: c(self.cost.land_amort_years),
                fixed_capex_per_site_usd: c(self.cost.fixed_capex_per_site_usd),
                variable_capex_per_mw_usd: c(self.cost.variable_capex_per_mw_usd),
                grid_fee_usd: c(self.cost.grid_fee_usd),
                grid_block_mw: c(self.cost.grid_block_mw),
                grid_fee_mode: self.cost.grid_fee_mode,
                infra_lifetime_years: c(self.cost.infra_lifetime_years),
                fixed_opex_per_site_usd: c(self.cost.fixed_opex_per_site_usd),
                energy_price_usd_per_kwh: c(self.cost.energy_price_usd_per_kwh),
                fx_krw_per_usd: c(self.cost.fx_krw_per_usd),
            },
        }
    }
}
