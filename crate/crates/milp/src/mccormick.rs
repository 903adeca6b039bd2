//! Exact linearization of `binary * bounded continuous` products.
//!
//! For `z = b * y` with `b` in {0, 1} and `y` in `[lo, hi]`, the four rows
//!
//! ```text
//! b*lo          <= z <= b*hi
//! y + (b-1)*hi  <= z <= y + (b-1)*lo
//! ```
//!
//! pin `z = 0` when `b = 0` and `z = y` when `b = 1`.

use crate::error::ModelError;
use crate::model::{MilpModel, Sense, VarId};

/// Adds `z = b * y` as a new continuous variable named `name` and returns it.
///
/// `y`'s declared bounds are the envelope bounds, so they must be finite.
pub fn add_mccormick(model: &mut MilpModel, name: &str, b: VarId, y: VarId) -> Result<VarId, ModelError> {
    let bvar = model.var(b);
    if !bvar.is_binary() {
        return Err(ModelError::NotBinary {
            name: bvar.name.clone(),
        });
    }
    let yvar = model.var(y);
    let (lo, hi) = (yvar.lower, yvar.upper);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(ModelError::UnboundedFactor {
            name: yvar.name.clone(),
            lower: lo,
            upper: hi,
        });
    }
    let z = model.add_continuous(name, lo.min(0.0), hi.max(0.0))?;
    // b*lo <= z
    model.add_constraint([(z, 1.0), (b, -lo)], Sense::Ge, 0.0, format!("mc_lo[{name}]"))?;
    // z <= b*hi
    model.add_constraint([(z, 1.0), (b, -hi)], Sense::Le, 0.0, format!("mc_hi[{name}]"))?;
    // y + (b-1)*hi <= z  <=>  z - y - hi*b >= -hi
    model.add_constraint(
        [(z, 1.0), (y, -1.0), (b, -hi)],
        Sense::Ge,
        -hi,
        format!("mc_on_lo[{name}]"),
    )?;
    // z <= y + (b-1)*lo  <=>  z - y - lo*b <= -lo
    model.add_constraint(
        [(z, 1.0), (y, -1.0), (b, -lo)],
        Sense::Le,
        -lo,
        format!("mc_on_hi[{name}]"),
    )?;
    Ok(z)
}
