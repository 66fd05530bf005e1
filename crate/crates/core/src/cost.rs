//! Per-primitive latency (cycles) and energy (pJ) models.
//!
//! All energies are picojoules; latencies are cycles at the configured
//! operating frequency. The shipped defaults are calibrated values, not
//! measurements: they are fitted jointly so that the reference workload
//! reproduces the published latency ratios, per-encoder energy split, and
//! converter energy shares (see `tests/acceptance.rs`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hw::HardwareSpec;

/// Energy split of a cost by physical component, in pJ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub array: f64,
    pub adc: f64,
    pub dac: f64,
    pub sna: f64,
    pub sfu: f64,
    pub write: f64,
    pub memory: f64,
    pub interconnect: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.array
            + self.adc
            + self.dac
            + self.sna
            + self.sfu
            + self.write
            + self.memory
            + self.interconnect
    }

    pub fn add(&mut self, other: &CostBreakdown) {
        self.array += other.array;
        self.adc += other.adc;
        self.dac += other.dac;
        self.sna += other.sna;
        self.sfu += other.sfu;
        self.write += other.write;
        self.memory += other.memory;
        self.interconnect += other.interconnect;
    }

    pub fn scaled(&self, f: f64) -> CostBreakdown {
        CostBreakdown {
            array: self.array * f,
            adc: self.adc * f,
            dac: self.dac * f,
            sna: self.sna * f,
            sfu: self.sfu * f,
            write: self.write * f,
            memory: self.memory * f,
            interconnect: self.interconnect * f,
        }
    }
}

/// Latency and energy of one primitive invocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cost {
    pub cycles: u64,
    pub energy_pj: f64,
    pub breakdown: CostBreakdown,
}

impl Cost {
    pub fn zero() -> Cost {
        Cost {
            cycles: 0,
            energy_pj: 0.0,
            breakdown: CostBreakdown::default(),
        }
    }

    fn from_breakdown(cycles: u64, breakdown: CostBreakdown) -> Cost {
        Cost {
            cycles,
            energy_pj: breakdown.total(),
            breakdown,
        }
    }
}

/// Configurable cost parameters for every hardware primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostTable {
    /// Crossbar cell MAC energy, per cell per input-bit stream.
    pub e_xbar_mac_pj: f64,
    /// SRAM compute-cell MAC energy; defaults to 4x the crossbar cell.
    pub e_sram_mac_pj: f64,
    /// Projection-side ADC conversion.
    pub e_adc_conv_pj: f64,
    /// Attention-side (SAR) ADC conversion.
    pub e_sram_adc_conv_pj: f64,
    /// Word-line drive, per logical row per stream per slice per column tile.
    pub e_dac_drive_pj: f64,
    pub e_sram_write_bit_pj: f64,
    /// NVM programming energy per cell.
    pub e_nvm_write_cell_pj: f64,
    /// Shift-and-add merge, charged per ADC conversion on the SRAM path.
    pub e_sna_op_pj: f64,
    /// Vector-unit element operation.
    pub e_sfu_op_pj: f64,
    pub e_scratchpad_byte_pj: f64,
    pub e_shared_mem_byte_pj: f64,
    pub e_readonly_byte_pj: f64,
    /// Background (leakage + clock) energy charged per elapsed cycle.
    pub e_static_pj_per_cycle: f64,
    pub t_xbar_settle_cycles: u64,
    pub t_sram_access_cycles: u64,
    pub t_sfu_op_cycles: u64,
    /// SRAM bank write, per row.
    pub t_write_row_cycles: u64,
    /// NVM programming, per crossbar row.
    pub t_nvm_write_row_cycles: u64,
    pub simd_lanes: u32,
    /// MAC throughput per lane per cycle for the temporal SIMD path.
    pub simd_ops_per_cycle: f64,
}

impl Default for CostTable {
    fn default() -> Self {
        let e_xbar_mac_pj = 2.15e-5;
        Self {
            e_xbar_mac_pj,
            e_sram_mac_pj: 4.0 * e_xbar_mac_pj,
            e_adc_conv_pj: 1.713e-3,
            e_sram_adc_conv_pj: 3.50e-3,
            e_dac_drive_pj: 1.9e-4,
            e_sram_write_bit_pj: 4.29e-2,
            e_nvm_write_cell_pj: 1.0,
            e_sna_op_pj: 1.79e-2,
            e_sfu_op_pj: 1.0e-4,
            e_scratchpad_byte_pj: 0.02,
            e_shared_mem_byte_pj: 0.04,
            e_readonly_byte_pj: 0.05,
            e_static_pj_per_cycle: 610.0,
            t_xbar_settle_cycles: 2,
            t_sram_access_cycles: 1,
            t_sfu_op_cycles: 1,
            t_write_row_cycles: 1,
            t_nvm_write_row_cycles: 100,
            simd_lanes: 64,
            simd_ops_per_cycle: 0.3125,
        }
    }
}

impl CostTable {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("e_xbar_mac_pj", self.e_xbar_mac_pj),
            ("e_sram_mac_pj", self.e_sram_mac_pj),
            ("e_adc_conv_pj", self.e_adc_conv_pj),
            ("e_sram_adc_conv_pj", self.e_sram_adc_conv_pj),
            ("e_dac_drive_pj", self.e_dac_drive_pj),
            ("e_sram_write_bit_pj", self.e_sram_write_bit_pj),
            ("e_nvm_write_cell_pj", self.e_nvm_write_cell_pj),
            ("e_sna_op_pj", self.e_sna_op_pj),
            ("e_sfu_op_pj", self.e_sfu_op_pj),
            ("e_scratchpad_byte_pj", self.e_scratchpad_byte_pj),
            ("e_shared_mem_byte_pj", self.e_shared_mem_byte_pj),
            ("e_readonly_byte_pj", self.e_readonly_byte_pj),
            ("e_static_pj_per_cycle", self.e_static_pj_per_cycle),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidCostTable(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("t_xbar_settle_cycles", self.t_xbar_settle_cycles),
            ("t_sram_access_cycles", self.t_sram_access_cycles),
            ("t_sfu_op_cycles", self.t_sfu_op_cycles),
            ("t_write_row_cycles", self.t_write_row_cycles),
            ("t_nvm_write_row_cycles", self.t_nvm_write_row_cycles),
        ] {
            if v < 1 {
                return Err(Error::InvalidCostTable(format!(
                    "{name} must be >= 1 cycle, got {v}"
                )));
            }
        }
        if self.simd_lanes < 1 {
            return Err(Error::InvalidCostTable("simd_lanes must be >= 1".into()));
        }
        if !(self.simd_ops_per_cycle > 0.0) {
            return Err(Error::InvalidCostTable(
                "simd_ops_per_cycle must be > 0".into(),
            ));
        }
        Ok(())
    }
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Array-level converter geometry for one engine side.
#[derive(Debug, Clone, Copy)]
struct ArrayGeometry {
    array_rows: u64,
    array_cols: u64,
    adcs: u64,
    dac_bits: u64,
    adc_rate_sps: u64,
    frequency_hz: u64,
    settle_cycles: u64,
}

#[derive(Debug, Clone, Copy)]
struct MvmEnergies {
    e_mac: f64,
    e_dac: f64,
    e_adc: f64,
    /// Per-conversion shift-and-add merge; zero on the crossbar path.
    e_sna: f64,
}

/// Streams one input vector against a `rows x cols` stationary matrix laid
/// out over arrays of the given geometry. Bit slices occupy parallel arrays:
/// they multiply energy, never cycles. Column tiles share the convert time;
/// the slowest (fullest) tile sets the per-stream latency.
fn mvm_vector_cost(
    rows: u64,
    cols: u64,
    act_bits: u64,
    slices: u64,
    geo: ArrayGeometry,
    e: MvmEnergies,
) -> Result<Cost> {
    if rows < 1 || cols < 1 || act_bits < 1 || slices < 1 {
        return Err(Error::InvalidCostTable(
            "MVM dimensions and slices must be >= 1".into(),
        ));
    }
    if act_bits % geo.dac_bits != 0 {
        return Err(Error::InvalidCostTable(format!(
            "act_bits ({act_bits}) must be divisible by dac_bits ({})",
            geo.dac_bits
        )));
    }
    let streams = act_bits / geo.dac_bits;
    let widest_tile_cols = cols.min(geo.array_cols);
    let conversions_per_adc = ceil_div(widest_tile_cols, geo.adcs);
    // Conversions serialize per ADC at adc_rate; integer math keeps the
    // rounding exact for any rate/frequency pair.
    let stream_cycles = ceil_div(conversions_per_adc * geo.frequency_hz, geo.adc_rate_sps);
    let cycles = streams * stream_cycles + geo.settle_cycles;

    let col_tiles = ceil_div(cols, geo.array_cols);
    let row_tiles = ceil_div(rows, geo.array_rows);
    let drives = rows * col_tiles;
    let conversions = cols * row_tiles;
    let per_slice_stream = rows as f64 * cols as f64 * e.e_mac + drives as f64 * e.e_dac;
    let scale = (slices * streams) as f64;
    let breakdown = CostBreakdown {
        array: rows as f64 * cols as f64 * e.e_mac * scale,
        dac: drives as f64 * e.e_dac * scale,
        adc: conversions as f64 * e.e_adc * scale,
        sna: conversions as f64 * e.e_sna * scale,
        ..Default::default()
    };
    debug_assert!(per_slice_stream >= 0.0);
    Ok(Cost::from_breakdown(cycles, breakdown))
}

/// One input vector through NVM crossbars holding a `rows x cols` static
/// matrix split into `slices` bit slices.
pub fn xbar_mvm_cost(
    rows: u64,
    cols: u64,
    act_bits: u64,
    slices: u64,
    hw: &HardwareSpec,
    table: &CostTable,
) -> Result<Cost> {
    let p = &hw.projection;
    mvm_vector_cost(
        rows,
        cols,
        act_bits,
        slices,
        ArrayGeometry {
            array_rows: p.xbar_rows as u64,
            array_cols: p.xbar_cols as u64,
            adcs: p.adcs_per_xbar as u64,
            dac_bits: p.dac_bits as u64,
            adc_rate_sps: p.adc_rate_sps,
            frequency_hz: hw.frequency_hz,
            settle_cycles: table.t_xbar_settle_cycles,
        },
        MvmEnergies {
            e_mac: table.e_xbar_mac_pj,
            e_dac: table.e_dac_drive_pj,
            e_adc: table.e_adc_conv_pj,
            e_sna: 0.0,
        },
    )
}

/// One input vector through attention-engine SRAM arrays; same stream
/// structure as the crossbar path with the SAR ADC parameters and a
/// shift-and-add merge per conversion.
pub fn sram_mvm_cost(
    rows: u64,
    cols: u64,
    act_bits: u64,
    slices: u64,
    hw: &HardwareSpec,
    table: &CostTable,
) -> Result<Cost> {
    let a = &hw.attention;
    mvm_vector_cost(
        rows,
        cols,
        act_bits,
        slices,
        ArrayGeometry {
            array_rows: a.sram_rows as u64,
            array_cols: a.sram_cols as u64,
            adcs: a.adcs_per_array as u64,
            dac_bits: a.dac_bits as u64,
            adc_rate_sps: a.adc_rate_sps,
            frequency_hz: hw.frequency_hz,
            settle_cycles: table.t_sram_access_cycles,
        },
        MvmEnergies {
            e_mac: table.e_sram_mac_pj,
            e_dac: table.e_dac_drive_pj,
            e_adc: table.e_sram_adc_conv_pj,
            e_sna: table.e_sna_op_pj,
        },
    )
}

/// Row-parallel SRAM bank write of a `rows x cols` tile at `bits` per value.
pub fn sram_write_cost(rows: u64, cols: u64, bits: u64, table: &CostTable) -> Result<Cost> {
    if rows < 1 || cols < 1 || bits < 1 {
        return Err(Error::InvalidCostTable("write dimensions must be >= 1".into()));
    }
    let breakdown = CostBreakdown {
        write: (rows * cols * bits) as f64 * table.e_sram_write_bit_pj,
        ..Default::default()
    };
    Ok(Cost::from_breakdown(rows * table.t_write_row_cycles, breakdown))
}

/// Programming `rows` crossbar rows of `cols` cells across `slices` parallel
/// slice arrays. Slices program concurrently; cells multiply energy only.
pub fn nvm_write_cost(rows: u64, cols: u64, slices: u64, table: &CostTable) -> Result<Cost> {
    if rows < 1 || cols < 1 || slices < 1 {
        return Err(Error::InvalidCostTable("write dimensions must be >= 1".into()));
    }
    let breakdown = CostBreakdown {
        write: (rows * cols * slices) as f64 * table.e_nvm_write_cell_pj,
        ..Default::default()
    };
    Ok(Cost::from_breakdown(rows * table.t_nvm_write_row_cycles, breakdown))
}

/// M x K multiply-accumulate block on the temporal 1-D SIMD lanes.
pub fn simd_mvm_cost(m: u64, k: u64, table: &CostTable) -> Result<Cost> {
    if m < 1 || k < 1 {
        return Err(Error::InvalidCostTable("SIMD MVM dims must be >= 1".into()));
    }
    let macs = m * k;
    let throughput = table.simd_lanes as f64 * table.simd_ops_per_cycle;
    let cycles = ((macs as f64) / throughput).ceil() as u64;
    let breakdown = CostBreakdown {
        sfu: macs as f64 * table.e_sfu_op_pj,
        ..Default::default()
    };
    Ok(Cost::from_breakdown(cycles.max(1), breakdown))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SfuKind {
    Softmax,
    LayerNorm,
    Add,
    Mul,
    Exp,
    Div,
}

impl SfuKind {
    /// Element-op passes for one value of the given kind. Softmax covers
    /// max-subtract, exponentiate, sum-reduce, divide, writeback.
    pub fn ops_per_elem(self) -> u64 {
        match self {
            SfuKind::Softmax => 5,
            SfuKind::LayerNorm => 5,
            SfuKind::Add | SfuKind::Mul | SfuKind::Exp | SfuKind::Div => 1,
        }
    }
}

/// Cost of `op_count`-pass vector work over `length` elements on the shared
/// vector units.
pub fn vector_ops_cost(
    op_count: u64,
    length: u64,
    hw: &HardwareSpec,
    table: &CostTable,
) -> Result<Cost> {
    if length < 1 {
        return Err(Error::InvalidCostTable("vector op length must be >= 1".into()));
    }
    let lanes = hw.attention.sfu_lanes();
    let cycles = op_count * ceil_div(length, lanes) * table.t_sfu_op_cycles;
    let breakdown = CostBreakdown {
        sfu: (op_count * length) as f64 * table.e_sfu_op_pj,
        ..Default::default()
    };
    Ok(Cost::from_breakdown(cycles.max(1), breakdown))
}

/// One vector-unit kernel over `length` elements.
pub fn sfu_cost(kind: SfuKind, length: u64, hw: &HardwareSpec, table: &CostTable) -> Result<Cost> {
    vector_ops_cost(kind.ops_per_elem(), length, hw, table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferPath {
    Scratchpad,
    SharedMem,
    ReadonlyTile,
    Bus,
}

/// Moving `bytes` along the given path. Memory paths charge access energy;
/// the bus charges transport energy. Cycles follow the shared-port width in
/// all cases; zero bytes cost nothing.
pub fn transfer_cost(
    bytes: u64,
    path: TransferPath,
    hw: &HardwareSpec,
    table: &CostTable,
) -> Result<Cost> {
    if bytes == 0 {
        return Ok(Cost::zero());
    }
    let cycles = ceil_div(bytes, hw.interconnect.bus_bytes_per_cycle);
    let mut breakdown = CostBreakdown::default();
    match path {
        TransferPath::Bus => breakdown.interconnect = bytes as f64 * hw.interconnect.energy_per_byte_pj,
        TransferPath::Scratchpad => breakdown.memory = bytes as f64 * table.e_scratchpad_byte_pj,
        TransferPath::SharedMem => breakdown.memory = bytes as f64 * table.e_shared_mem_byte_pj,
        TransferPath::ReadonlyTile => breakdown.memory = bytes as f64 * table.e_readonly_byte_pj,
    }
    Ok(Cost::from_breakdown(cycles, breakdown))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hw() -> HardwareSpec {
        HardwareSpec::default()
    }

    #[test]
    fn reference_crossbar_vector_cycles() {
        // 128x128, 8-bit acts, 1-bit DAC, 2 ADCs at 1.28 GS/s, 1 GHz:
        // 8 streams x ceil(64 / 1.28) = 400 cycles plus settle.
        let t = CostTable::default();
        let c = xbar_mvm_cost(128, 128, 8, 4, &hw(), &t).unwrap();
        assert_eq!(c.cycles, 400 + t.t_xbar_settle_cycles);
    }

    #[test]
    fn minimal_crossbar_cost() {
        let t = CostTable::default();
        let c = xbar_mvm_cost(1, 1, 1, 1, &hw(), &t).unwrap();
        let expected = t.e_xbar_mac_pj + t.e_dac_drive_pj + t.e_adc_conv_pj;
        assert!((c.energy_pj - expected).abs() < 1e-12);
        assert_eq!(c.cycles, 1 + t.t_xbar_settle_cycles);
    }

    #[test]
    fn act_bits_must_divide() {
        let mut h = hw();
        h.projection.dac_bits = 3;
        assert!(xbar_mvm_cost(8, 8, 8, 1, &h, &CostTable::default()).is_err());
    }

    #[test]
    fn cycles_invariant_in_slices_energy_linear() {
        let t = CostTable::default();
        let c1 = xbar_mvm_cost(128, 128, 8, 1, &hw(), &t).unwrap();
        let c4 = xbar_mvm_cost(128, 128, 8, 4, &hw(), &t).unwrap();
        assert_eq!(c1.cycles, c4.cycles);
        assert!((c4.energy_pj - 4.0 * c1.energy_pj).abs() < 1e-9);
    }

    #[test]
    fn sram_array_energy_is_4x_crossbar() {
        let t = CostTable::default();
        let x = xbar_mvm_cost(64, 64, 8, 4, &hw(), &t).unwrap();
        let s = sram_mvm_cost(64, 64, 8, 4, &hw(), &t).unwrap();
        assert!((s.breakdown.array - 4.0 * x.breakdown.array).abs() < 1e-9);
    }

    #[test]
    fn query_bank_stream_cycles() {
        // 64x512 stationary matrix spans four 128-col tiles; each tile keeps
        // 64 conversions per ADC, so the stream time matches the full array.
        let t = CostTable::default();
        let c = sram_mvm_cost(64, 512, 8, 8, &hw(), &t).unwrap();
        assert_eq!(c.cycles, 400 + t.t_sram_access_cycles);
    }

    #[test]
    fn monotonicity_in_rows_cols_bits() {
        let t = CostTable::default();
        let base = xbar_mvm_cost(64, 64, 8, 2, &hw(), &t).unwrap();
        let more_rows = xbar_mvm_cost(128, 64, 8, 2, &hw(), &t).unwrap();
        let more_cols = xbar_mvm_cost(64, 128, 8, 2, &hw(), &t).unwrap();
        let more_bits = xbar_mvm_cost(64, 64, 16, 2, &hw(), &t).unwrap();
        assert!(more_rows.energy_pj > base.energy_pj);
        assert!(more_cols.energy_pj > base.energy_pj);
        assert!(more_bits.cycles > base.cycles && more_bits.energy_pj > base.energy_pj);
        assert!(more_cols.cycles >= base.cycles);
    }

    #[test]
    fn breakdown_sums_to_energy() {
        let t = CostTable::default();
        for c in [
            xbar_mvm_cost(100, 200, 8, 4, &hw(), &t).unwrap(),
            sram_mvm_cost(64, 512, 8, 8, &hw(), &t).unwrap(),
            sram_write_cost(512, 64, 8, &t).unwrap(),
            simd_mvm_cost(256, 64, &t).unwrap(),
            sfu_cost(SfuKind::Softmax, 512, &hw(), &t).unwrap(),
            transfer_cost(1024, TransferPath::Bus, &hw(), &t).unwrap(),
        ] {
            assert!((c.breakdown.total() - c.energy_pj).abs() <= 1e-9 * c.energy_pj.max(1.0));
        }
    }

    #[test]
    fn write_cost_examples() {
        let t = CostTable::default();
        let one = sram_write_cost(1, 1, 1, &t).unwrap();
        assert_eq!(one.cycles, t.t_write_row_cycles);
        assert!((one.energy_pj - t.e_sram_write_bit_pj).abs() < 1e-12);

        // Q and V residency per head tile: two 512-column writes.
        let qv = sram_write_cost(2 * 512, 64, 8, &t).unwrap();
        assert_eq!(qv.cycles, 2 * 512 * t.t_write_row_cycles);
    }

    #[test]
    fn simd_examples() {
        let mut t = CostTable::default();
        let one = simd_mvm_cost(1, 1, &t).unwrap();
        assert_eq!(one.cycles, 1);
        // 64 lanes at a quarter MAC per lane-cycle: 16 MACs/cycle, so a
        // 256-vector set of 256x64 products takes 262,144 cycles.
        t.simd_lanes = 64;
        t.simd_ops_per_cycle = 0.25;
        let per_vec = simd_mvm_cost(256, 64, &t).unwrap();
        assert_eq!(per_vec.cycles * 256, 262_144);
    }

    #[test]
    fn sfu_softmax_cycles() {
        let t = CostTable::default();
        let c = sfu_cost(SfuKind::Softmax, 512, &hw(), &t).unwrap();
        assert_eq!(c.cycles, 5 * 8 * t.t_sfu_op_cycles);
        let add = sfu_cost(SfuKind::Add, 1, &hw(), &t).unwrap();
        assert_eq!(add.cycles, t.t_sfu_op_cycles);
    }

    #[test]
    fn transfer_examples() {
        let t = CostTable::default();
        let zero = transfer_cost(0, TransferPath::Bus, &hw(), &t).unwrap();
        assert_eq!((zero.cycles, zero.energy_pj), (0, 0.0));
        let qkv = transfer_cost(3 * 64 * 768, TransferPath::Bus, &hw(), &t).unwrap();
        assert_eq!(qkv.cycles, 3 * 64 * 768 / hw().interconnect.bus_bytes_per_cycle);
        assert!(qkv.breakdown.interconnect > 0.0);
        let embed = transfer_cost(512 * 768, TransferPath::ReadonlyTile, &hw(), &t).unwrap();
        assert!(embed.breakdown.memory > 0.0);
    }

    #[test]
    fn rejects_degenerate_dims() {
        let t = CostTable::default();
        assert!(sram_mvm_cost(0, 8, 8, 1, &hw(), &t).is_err());
        assert!(xbar_mvm_cost(8, 0, 8, 1, &hw(), &t).is_err());
    }

    #[test]
    fn default_table_validates() {
        CostTable::default().validate().unwrap();
        let mut t = CostTable::default();
        t.t_sfu_op_cycles = 0;
        assert!(t.validate().is_err());
    }
}
