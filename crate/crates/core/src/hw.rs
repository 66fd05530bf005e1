//! Accelerator description: projection-engine crossbar hierarchy, attention
//! engine SRAM tiles, interconnect, and NVM device limits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionSpec {
    pub num_tiles: u32,
    pub cores_per_tile: u32,
    pub crossbars_per_core: u32,
    pub xbar_rows: u32,
    pub xbar_cols: u32,
    /// Bits stored per NVM cell.
    pub cell_bits: u32,
    pub dac_bits: u32,
    pub adcs_per_xbar: u32,
    pub adc_bits: u32,
    /// ADC conversion rate in samples per second.
    pub adc_rate_sps: u64,
    pub shared_mem_bytes: u64,
    pub scratchpad_bytes: u64,
    /// Dense NVM storage for the embedding table and other read-only data.
    pub readonly_tile_bytes: u64,
}

impl Default for ProjectionSpec {
    fn default() -> Self {
        Self {
            num_tiles: 36,
            cores_per_tile: 8,
            crossbars_per_core: 6,
            xbar_rows: 128,
            xbar_cols: 128,
            cell_bits: 2,
            dac_bits: 1,
            adcs_per_xbar: 2,
            adc_bits: 8,
            adc_rate_sps: 1_280_000_000,
            shared_mem_bytes: 384 * 1024,
            scratchpad_bytes: 4 * 1024,
            readonly_tile_bytes: 32 * 1024 * 1024,
        }
    }
}

impl ProjectionSpec {
    pub fn total_crossbars(&self) -> u64 {
        self.num_tiles as u64 * self.cores_per_tile as u64 * self.crossbars_per_core as u64
    }

    pub fn cells_per_crossbar(&self) -> u64 {
        self.xbar_rows as u64 * self.xbar_cols as u64
    }

    pub fn total_cells(&self) -> u64 {
        self.total_crossbars() * self.cells_per_crossbar()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttentionSpec {
    pub num_pe: u32,
    pub ahct_per_pe: u32,
    pub banks_per_ahct: u32,
    pub sram_arrays_per_bank: u32,
    pub sram_rows: u32,
    pub sram_cols: u32,
    /// Bits per SRAM compute cell.
    pub cell_bits: u32,
    pub dac_bits: u32,
    pub adcs_per_array: u32,
    pub adc_bits: u32,
    pub adc_rate_sps: u64,
    pub sfu_vector_units: u32,
    pub sfu_lanes_per_vu: u32,
    pub block_seq_accum_bytes: u64,
}

impl Default for AttentionSpec {
    fn default() -> Self {
        Self {
            num_pe: 2,
            ahct_per_pe: 16,
            banks_per_ahct: 8,
            sram_arrays_per_bank: 6,
            sram_rows: 128,
            sram_cols: 128,
            cell_bits: 1,
            dac_bits: 1,
            adcs_per_array: 2,
            adc_bits: 8,
            adc_rate_sps: 1_280_000_000,
            sfu_vector_units: 16,
            sfu_lanes_per_vu: 4,
            block_seq_accum_bytes: 6 * 1024,
        }
    }
}

impl AttentionSpec {
    pub fn total_ahcts(&self) -> u32 {
        self.num_pe * self.ahct_per_pe
    }

    /// Compute-cell bits available inside one attention head tile.
    pub fn bits_per_ahct(&self) -> u64 {
        self.banks_per_ahct as u64
            * self.sram_arrays_per_bank as u64
            * self.sram_rows as u64
            * self.sram_cols as u64
            * self.cell_bits as u64
    }

    pub fn sfu_lanes(&self) -> u64 {
        self.sfu_vector_units as u64 * self.sfu_lanes_per_vu as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterconnectSpec {
    pub bus_bytes_per_cycle: u64,
    /// Transport energy per byte moved over the shared bus (pJ).
    pub energy_per_byte_pj: f64,
}

impl Default for InterconnectSpec {
    fn default() -> Self {
        Self {
            bus_bytes_per_cycle: 1,
            energy_per_byte_pj: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NvmSpec {
    pub r_min_ohm: f64,
    pub r_max_ohm: f64,
    /// Reliable write count per cell.
    pub endurance_writes: u64,
}

impl Default for NvmSpec {
    fn default() -> Self {
        Self {
            r_min_ohm: 100e3,
            r_max_ohm: 1e6,
            endurance_writes: 1_000_000,
        }
    }
}

/// Full accelerator description. Defaults give a 1 GHz part with 36 NVM
/// tiles (8 cores x 6 crossbars of 128x128 2-bit cells, 1-bit DACs, two
/// 8-bit 1.28 GS/s ADCs per crossbar), two attention PEs of 16 head tiles
/// each, a 16x4-lane vector unit, and a 6 KB block accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareSpec {
    pub frequency_hz: u64,
    pub projection: ProjectionSpec,
    pub attention: AttentionSpec,
    pub interconnect: InterconnectSpec,
    pub nvm: NvmSpec,
}

impl Default for HardwareSpec {
    fn default() -> Self {
        Self {
            frequency_hz: 1_000_000_000,
            projection: ProjectionSpec::default(),
            attention: AttentionSpec::default(),
            interconnect: InterconnectSpec::default(),
            nvm: NvmSpec::default(),
        }
    }
}

impl HardwareSpec {
    pub fn validate(&self) -> Result<()> {
        let p = &self.projection;
        let a = &self.attention;
        let counts: [(&str, u64); 16] = [
            ("frequency_hz", self.frequency_hz),
            ("projection.num_tiles", p.num_tiles as u64),
            ("projection.cores_per_tile", p.cores_per_tile as u64),
            ("projection.crossbars_per_core", p.crossbars_per_core as u64),
            ("projection.xbar_rows", p.xbar_rows as u64),
            ("projection.xbar_cols", p.xbar_cols as u64),
            ("projection.cell_bits", p.cell_bits as u64),
            ("projection.dac_bits", p.dac_bits as u64),
            ("projection.adcs_per_xbar", p.adcs_per_xbar as u64),
            ("attention.num_pe", a.num_pe as u64),
            ("attention.ahct_per_pe", a.ahct_per_pe as u64),
            ("attention.banks_per_ahct", a.banks_per_ahct as u64),
            ("attention.sram_arrays_per_bank", a.sram_arrays_per_bank as u64),
            ("attention.sram_rows", a.sram_rows as u64),
            ("attention.sram_cols", a.sram_cols as u64),
            ("interconnect.bus_bytes_per_cycle", self.interconnect.bus_bytes_per_cycle),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::InvalidHardware(format!("{name} must be >= 1, got {v}")));
            }
        }
        if p.cell_bits > p.adc_bits {
            return Err(Error::InvalidHardware(format!(
                "projection cell_bits ({}) must not exceed adc_bits ({})",
                p.cell_bits, p.adc_bits
            )));
        }
        if p.adc_rate_sps == 0 || a.adc_rate_sps == 0 {
            return Err(Error::InvalidHardware("adc_rate_sps must be > 0".into()));
        }
        if a.cell_bits > a.adc_bits {
            return Err(Error::InvalidHardware(format!(
                "attention cell_bits ({}) must not exceed adc_bits ({})",
                a.cell_bits, a.adc_bits
            )));
        }
        if self.nvm.endurance_writes < 1 {
            return Err(Error::InvalidHardware("nvm.endurance_writes must be >= 1".into()));
        }
        if !(self.nvm.r_min_ohm > 0.0 && self.nvm.r_max_ohm >= self.nvm.r_min_ohm) {
            return Err(Error::InvalidHardware(
                "nvm resistance range must satisfy 0 < r_min <= r_max".into(),
            ));
        }
        if self.interconnect.energy_per_byte_pj < 0.0 {
            return Err(Error::InvalidHardware("bus energy must be >= 0".into()));
        }
        Ok(())
    }
}
