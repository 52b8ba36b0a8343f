//! Young functions and Orlicz-space numerics on finite probability spaces.

mod norms;
mod record;
mod utility;
mod young;

pub use norms::{luxemburg_norm, polar_gauge, ui_tail_bound};
pub use record::parse_young;
pub use utility::{conjugate_utility, utility_from_young, young_minorant, UtilityFunction};
pub use young::{complementary, Tabulated, YoungFunction};
