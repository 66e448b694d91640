//! Network structure, assignments, parameter tables and elimination orders.

mod assignment;
mod format;
mod network;
mod order;
mod table;

pub use assignment::{Assignment, Dataset, Query};
pub use format::{named_rows, table_from_named_rows, NamedRows, NetworkFile, PriorFile};
pub use network::{Network, VariableSpec};
pub use order::{min_fill_order, moral_graph, EliminationOrder};
pub use table::{validate_params, CptParams, FamilyTable, NORMALIZATION_TOLERANCE};
