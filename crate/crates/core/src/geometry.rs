//! DRAM hierarchy geometry and addressing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the simulated memory, from channels down to row width.
///
/// Defaults model the Micron DDR3-1333 4Gb configuration (8KB rows, 512
/// rows per subarray, 8 banks x 2 ranks x 2 channels). Every field scales
/// down to desk-test sizes such as 8 rows x 8 columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DramGeometry {
    pub channels: usize,
    pub ranks_per_channel: usize,
    pub banks_per_rank: usize,
    pub subarrays_per_bank: usize,
    pub rows_per_subarray: usize,
    pub columns_per_row: usize,
}

impl Default for DramGeometry {
    fn default() -> Self {
        Self {
            channels: 2,
            ranks_per_channel: 2,
            banks_per_rank: 8,
            subarrays_per_bank: 2,
            rows_per_subarray: 512,
            columns_per_row: 65_536,
        }
    }
}

impl DramGeometry {
    /// Small geometry for exhaustive tests: one bank, two subarrays.
    pub fn tiny(rows: usize, columns: usize) -> Self {
        Self {
            channels: 1,
            ranks_per_channel: 1,
            banks_per_rank: 1,
            subarrays_per_bank: 2,
            rows_per_subarray: rows,
            columns_per_row: columns,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("channels", self.channels),
            ("ranks_per_channel", self.ranks_per_channel),
            ("banks_per_rank", self.banks_per_rank),
            ("subarrays_per_bank", self.subarrays_per_bank),
            ("rows_per_subarray", self.rows_per_subarray),
            ("columns_per_row", self.columns_per_row),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.columns_per_row % 2 != 0 {
            return Err(Error::Config(format!(
                "columns_per_row must be even for the open-bitline split, got {}",
                self.columns_per_row
            )));
        }
        Ok(())
    }

    pub fn total_banks(&self) -> usize {
        self.channels * self.ranks_per_channel * self.banks_per_rank
    }

    /// Number of migration cells per migration row.
    pub fn half_columns(&self) -> usize {
        self.columns_per_row / 2
    }

    pub fn row_kilobytes(&self) -> f64 {
        self.columns_per_row as f64 / 8.0 / 1024.0
    }

    /// Flattens (channel, rank, bank) into a single bank index.
    pub fn flat_bank(&self, channel: usize, rank: usize, bank: usize) -> usize {
        (channel * self.ranks_per_channel + rank) * self.banks_per_rank + bank
    }

    /// Inverse of [`flat_bank`](Self::flat_bank).
    pub fn split_bank(&self, flat: usize) -> (usize, usize, usize) {
        let bank = flat % self.banks_per_rank;
        let rest = flat / self.banks_per_rank;
        (rest / self.ranks_per_channel, rest % self.ranks_per_channel, bank)
    }
}

/// Which of the two migration rows of a subarray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MigRow {
    Top,
    Bottom,
}

/// Row selector within a subarray: a data row or a migration row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Row {
    Data(usize),
    Mig(MigRow),
}

/// One of the two access ports of a migration cell. Port A is the
/// lower-column-index bitline of the bridged pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    A,
    B,
}

/// A migration-row access: which row and through which port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MigrationPort {
    pub side: MigRow,
    pub port: Port,
}

/// Full address of one row in the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowAddress {
    pub channel: usize,
    pub rank: usize,
    pub bank: usize,
    pub subarray: usize,
    pub row: Row,
}

impl RowAddress {
    pub fn data(channel: usize, rank: usize, bank: usize, subarray: usize, row: usize) -> Self {
        Self {
            channel,
            rank,
            bank,
            subarray,
            row: Row::Data(row),
        }
    }

    pub fn mig(channel: usize, rank: usize, bank: usize, subarray: usize, side: MigRow) -> Self {
        Self {
            channel,
            rank,
            bank,
            subarray,
            row: Row::Mig(side),
        }
    }

    /// Address of a row in a bank addressed by flat index.
    pub fn in_flat_bank(geometry: &DramGeometry, flat_bank: usize, subarray: usize, row: Row) -> Self {
        let (channel, rank, bank) = geometry.split_bank(flat_bank);
        Self {
            channel,
            rank,
            bank,
            subarray,
            row,
        }
    }

    pub fn flat_bank(&self, geometry: &DramGeometry) -> usize {
        geometry.flat_bank(self.channel, self.rank, self.bank)
    }

    pub fn same_subarray(&self, other: &RowAddress) -> bool {
        self.channel == other.channel
            && self.rank == other.rank
            && self.bank == other.bank
            && self.subarray == other.subarray
    }

    pub fn same_bank(&self, other: &RowAddress) -> bool {
        self.channel == other.channel && self.rank == other.rank && self.bank == other.bank
    }

    pub fn validate(&self, geometry: &DramGeometry) -> Result<()> {
        if self.channel >= geometry.channels
            || self.rank >= geometry.ranks_per_channel
            || self.bank >= geometry.banks_per_rank
            || self.subarray >= geometry.subarrays_per_bank
        {
            return Err(Error::Address(format!(
                "address {self:?} outside geometry {geometry:?}"
            )));
        }
        if let Row::Data(r) = self.row {
            if r >= geometry.rows_per_subarray {
                return Err(Error::Address(format!(
                    "row {r} outside subarray of {} rows",
                    geometry.rows_per_subarray
                )));
            }
        }
        Ok(())
    }
}

/// Bitline column a migration cell reaches through the given port, or
/// `None` for the bottom-row boundary cell whose second port is unwired.
///
/// Top cell k bridges columns 2k and 2k+1; bottom cell k bridges columns
/// 2k+1 and 2k+2.
pub fn port_column(side: MigRow, cell: usize, port: Port, columns_per_row: usize) -> Option<usize> {
    match (side, port) {
        (MigRow::Top, Port::A) => Some(2 * cell),
        (MigRow::Top, Port::B) => Some(2 * cell + 1),
        (MigRow::Bottom, Port::A) => Some(2 * cell + 1),
        (MigRow::Bottom, Port::B) => {
            let col = 2 * cell + 2;
            (col < columns_per_row).then_some(col)
        }
    }
}
