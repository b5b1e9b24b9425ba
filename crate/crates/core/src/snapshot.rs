//! Little-endian binary snapshots: magic `HSTO`, version, `N1 N2 Nz`, field
//! count, then per field a 16-byte NUL-padded ASCII name followed by the
//! interior values as `f64`, `k` slowest.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Component, Fields, ScalarField, State};
use crate::real::Real;

pub const MAGIC: &[u8; 4] = b"HSTO";
pub const VERSION: u32 = 1;
const NAME_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub dims: (usize, usize, usize),
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn from_state<R: Real>(state: &State<R>) -> Self {
        let dims = state.u().dims();
        let fields = Component::ALL
            .iter()
            .map(|&c| {
                let vals = state[c].interior().iter().map(|v| v.to_f64_lossy()).collect();
                (c.name().to_string(), vals)
            })
            .collect();
        Self { dims, fields }
    }

    /// Rebuilds a state from fields named `u`, `v`, `temp`, `salt`.
    pub fn to_state<R: Real>(&self, time: R) -> Result<State<R>> {
        let (n1, n2, nz) = self.dims;
        let mut comps = Vec::with_capacity(4);
        for c in Component::ALL {
            let (_, vals) = self
                .fields
                .iter()
                .find(|(n, _)| n == c.name())
                .ok_or_else(|| Error::Snapshot(format!("missing field {}", c.name())))?;
            let vals: Vec<R> = vals.iter().map(|&v| R::c(v)).collect();
            comps.push(ScalarField::from_interior(n1, n2, nz, c.bc(), &vals));
        }
        let comps: [ScalarField<R>; 4] = comps.try_into().expect("four components");
        Ok(State::from_fields(Fields { comps }, time))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let (n1, n2, nz) = self.dims;
        w.write_all(MAGIC)?;
        for x in [VERSION, n1 as u32, n2 as u32, nz as u32, self.fields.len() as u32] {
            w.write_all(&x.to_le_bytes())?;
        }
        for (name, vals) in &self.fields {
            if name.len() > NAME_LEN || !name.is_ascii() {
                return Err(Error::Snapshot(format!("bad field name {name:?}")));
            }
            if vals.len() != n1 * n2 * nz {
                return Err(Error::Snapshot(format!("field {name} has {} values", vals.len())));
            }
            let mut buf = [0u8; NAME_LEN];
            buf[..name.len()].copy_from_slice(name.as_bytes());
            w.write_all(&buf)?;
            for v in vals {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let mut u32s = [0u32; 5];
        for x in &mut u32s {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *x = u32::from_le_bytes(b);
        }
        let [version, n1, n2, nz, count] = u32s;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let dims = (n1 as usize, n2 as usize, nz as usize);
        let len = dims.0 * dims.1 * dims.2;
        let mut fields = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let mut nb = [0u8; NAME_LEN];
            r.read_exact(&mut nb)?;
            let end = nb.iter().position(|&b| b == 0).unwrap_or(NAME_LEN);
            let name = String::from_utf8(nb[..end].to_vec())
                .map_err(|_| Error::Snapshot("non-ascii field name".into()))?;
            let mut vals = Vec::with_capacity(len);
            let mut b = [0u8; 8];
            for _ in 0..len {
                r.read_exact(&mut b)?;
                vals.push(f64::from_le_bytes(b));
            }
            fields.push((name, vals));
        }
        Ok(Self { dims, fields })
    }
}
