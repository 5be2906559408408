//! Bit-level state of subarrays and the memory they compose.
//!
//! A subarray holds its data rows, the two migration rows, and the two
//! sense-amplifier stripes (row buffers). Even-indexed columns sense
//! through the top stripe and odd-indexed columns through the bottom
//! stripe, the open-bitline split. Stripe latches persist between
//! commands; a migration-row activation drives only the bitlines its
//! port reaches, leaving the other latches at their previous values.

use std::collections::BTreeMap;

use crate::bits::BitRow;
use crate::error::{Error, Result};
use crate::geometry::{DramGeometry, MigRow, Row, RowAddress};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubarrayState {
    data_rows: Vec<BitRow>,
    pub top_mig: BitRow,
    pub bottom_mig: BitRow,
    /// Latches for even-indexed columns (top stripe), length C/2.
    pub row_buffer_top: BitRow,
    /// Latches for odd-indexed columns (bottom stripe), length C/2.
    pub row_buffer_bottom: BitRow,
    pub open_row: Option<Row>,
}

impl SubarrayState {
    pub fn new(geometry: &DramGeometry) -> Self {
        let half = geometry.half_columns();
        Self {
            data_rows: vec![BitRow::zeros(geometry.columns_per_row); geometry.rows_per_subarray],
            top_mig: BitRow::zeros(half),
            bottom_mig: BitRow::zeros(half),
            row_buffer_top: BitRow::zeros(half),
            row_buffer_bottom: BitRow::zeros(half),
            open_row: None,
        }
    }

    pub fn data_row(&self, row: usize) -> &BitRow {
        &self.data_rows[row]
    }

    pub fn data_row_mut(&mut self, row: usize) -> &mut BitRow {
        &mut self.data_rows[row]
    }

    /// Latch value currently held for a bitline column.
    pub fn latch(&self, column: usize) -> bool {
        if column % 2 == 0 {
            self.row_buffer_top.get(column / 2)
        } else {
            self.row_buffer_bottom.get(column / 2)
        }
    }

    pub fn set_latch(&mut self, column: usize, value: bool) {
        if column % 2 == 0 {
            self.row_buffer_top.set(column / 2, value);
        } else {
            self.row_buffer_bottom.set(column / 2, value);
        }
    }

    /// Sense a full data row into both stripes (non-destructive restore).
    pub fn sense_data_row(&mut self, row: usize) {
        let columns = self.data_rows[row].len();
        for k in 0..columns / 2 {
            self.row_buffer_top.set(k, self.data_rows[row].get(2 * k));
            self.row_buffer_bottom.set(k, self.data_rows[row].get(2 * k + 1));
        }
    }

    /// Drive all latches back into a data row (full restore).
    pub fn restore_data_row(&mut self, row: usize) {
        let columns = self.data_rows[row].len();
        for k in 0..columns / 2 {
            self.data_rows[row].set(2 * k, self.row_buffer_top.get(k));
            self.data_rows[row].set(2 * k + 1, self.row_buffer_bottom.get(k));
        }
    }

    pub fn mig_row(&self, side: MigRow) -> &BitRow {
        match side {
            MigRow::Top => &self.top_mig,
            MigRow::Bottom => &self.bottom_mig,
        }
    }

    pub fn mig_row_mut(&mut self, side: MigRow) -> &mut BitRow {
        match side {
            MigRow::Top => &mut self.top_mig,
            MigRow::Bottom => &mut self.bottom_mig,
        }
    }
}

/// Key of a subarray: (flat bank index, subarray index).
pub type SubarrayKey = (usize, usize);

/// The whole simulated memory.
///
/// Subarray state is materialized lazily on first touch; untouched
/// subarrays read as all zeros, which keeps the default 512MB-of-bits
/// geometry cheap when a workload only exercises one subarray.
#[derive(Debug, Clone)]
pub struct MemoryState {
    geometry: DramGeometry,
    subarrays: BTreeMap<SubarrayKey, SubarrayState>,
}

/// Builds a memory with every cell zero and every bank precharged.
pub fn build_memory(geometry: DramGeometry) -> Result<MemoryState> {
    geometry.validate()?;
    Ok(MemoryState {
        geometry,
        subarrays: BTreeMap::new(),
    })
}

impl MemoryState {
    pub fn geometry(&self) -> &DramGeometry {
        &self.geometry
    }

    pub fn subarray(&self, bank: usize, subarray: usize) -> Option<&SubarrayState> {
        self.subarrays.get(&(bank, subarray))
    }

    pub fn subarray_mut(&mut self, bank: usize, subarray: usize) -> &mut SubarrayState {
        let geometry = self.geometry;
        self.subarrays
            .entry((bank, subarray))
            .or_insert_with(|| SubarrayState::new(&geometry))
    }

    pub fn touched_subarrays(&self) -> impl Iterator<Item = (&SubarrayKey, &SubarrayState)> {
        self.subarrays.iter()
    }

    /// True when no row is open anywhere in the flat bank.
    pub fn bank_precharged(&self, bank: usize) -> bool {
        self.subarrays
            .range((bank, 0)..=(bank, usize::MAX))
            .all(|(_, s)| s.open_row.is_none())
    }

    /// Host-side fixture write; no energy or timing is charged.
    pub fn host_write_row(&mut self, addr: &RowAddress, bits: &BitRow) -> Result<()> {
        addr.validate(&self.geometry)?;
        let row = match addr.row {
            Row::Data(r) => r,
            Row::Mig(_) => {
                return Err(Error::Address(
                    "host writes target data rows, not migration rows".into(),
                ))
            }
        };
        if bits.len() != self.geometry.columns_per_row {
            return Err(Error::Address(format!(
                "row write length {} != columns_per_row {}",
                bits.len(),
                self.geometry.columns_per_row
            )));
        }
        let bank = addr.flat_bank(&self.geometry);
        let sub = addr.subarray;
        *self.subarray_mut(bank, sub).data_row_mut(row) = bits.clone();
        Ok(())
    }

    /// Host-side observation; migration rows are readable for white-box
    /// tests and return C/2 bits.
    pub fn host_read_row(&self, addr: &RowAddress) -> Result<BitRow> {
        addr.validate(&self.geometry)?;
        let bank = addr.flat_bank(&self.geometry);
        match self.subarray(bank, addr.subarray) {
            Some(sub) => Ok(match addr.row {
                Row::Data(r) => sub.data_row(r).clone(),
                Row::Mig(side) => sub.mig_row(side).clone(),
            }),
            None => Ok(match addr.row {
                Row::Data(_) => BitRow::zeros(self.geometry.columns_per_row),
                Row::Mig(_) => BitRow::zeros(self.geometry.half_columns()),
            }),
        }
    }
}
