//! Target-variety model: cohomology basis, intersection pairing, and
//! dimension bookkeeping.
//!
//! The model is a basis-plus-pairing description only. Codegrees are in
//! complex units (half the topological degree), which keeps every
//! dimension count integral. The projective-plane model ships built in;
//! alternate targets can be loaded from a small JSON document, but the
//! correlator rewriting rules elsewhere in this crate are specific to the
//! plane and refuse other models.

use crate::error::Error;
use crate::rational::{parse_rational, Q};
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetModel {
    basis: Vec<String>,
    codegrees: Vec<u32>,
    pairing: Vec<Vec<Q>>,
    first_chern_degree: i64,
    dimension: u32,
}

impl TargetModel {
    pub fn new(
        basis: Vec<String>,
        codegrees: Vec<u32>,
        pairing: Vec<Vec<Q>>,
        first_chern_degree: i64,
        dimension: u32,
    ) -> Result<Self, Error> {
        let m = basis.len();
        if m == 0 || codegrees.len() != m || pairing.len() != m {
            return Err(Error::Model("basis, codegrees and pairing sizes disagree".into()));
        }
        for row in &pairing {
            if row.len() != m {
                return Err(Error::Model("pairing matrix is not square".into()));
            }
        }
        for i in 0..m {
            for j in 0..m {
                if pairing[i][j] != pairing[j][i] {
                    return Err(Error::Model("pairing matrix is not symmetric".into()));
                }
            }
        }
        let model = TargetModel { basis, codegrees, pairing, first_chern_degree, dimension };
        model.pairing_inverse()?; // invertibility is a construction-time requirement
        Ok(model)
    }

    /// The built-in model of the projective plane: basis `T0, T1, T2` with
    /// codegrees `0, 1, 2`, anti-diagonal Poincaré pairing, first Chern
    /// class of degree 3.
    pub fn plane() -> Self {
        let one = Q::one;
        let zero = Q::zero;
        TargetModel {
            basis: vec!["T0".into(), "T1".into(), "T2".into()],
            codegrees: vec![0, 1, 2],
            pairing: vec![
                vec![zero(), zero(), one()],
                vec![zero(), one(), zero()],
                vec![one(), zero(), zero()],
            ],
            first_chern_degree: 3,
            dimension: 2,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("bad model JSON: {e}")))?;
        let obj = v.as_object().ok_or_else(|| Error::Model("model JSON must be an object".into()))?;
        let basis: Vec<String> = obj
            .get("basis")
            .and_then(|b| b.as_array())
            .ok_or_else(|| Error::Model("missing `basis` array".into()))?
            .iter()
            .map(|s| s.as_str().map(String::from))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Model("`basis` entries must be strings".into()))?;
        let codegrees: Vec<u32> = obj
            .get("codegrees")
            .and_then(|b| b.as_array())
            .ok_or_else(|| Error::Model("missing `codegrees` array".into()))?
            .iter()
            .map(|x| x.as_u64().map(|n| n as u32))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Model("`codegrees` entries must be nonnegative integers".into()))?;
        let pairing_rows = obj
            .get("pairing")
            .and_then(|b| b.as_array())
            .ok_or_else(|| Error::Model("missing `pairing` matrix".into()))?;
        let mut pairing = Vec::new();
        for row in pairing_rows {
            let row = row.as_array().ok_or_else(|| Error::Model("pairing rows must be arrays".into()))?;
            let mut out = Vec::new();
            for cell in row {
                let q = match cell {
                    serde_json::Value::Number(n) => {
                        let i = n.as_i64().ok_or_else(|| Error::Model("pairing entries must be exact".into()))?;
                        crate::rational::qi(i)
                    }
                    serde_json::Value::String(s) => parse_rational(s).map_err(Error::Model)?,
                    _ => return Err(Error::Model("pairing entries must be integers or rational strings".into())),
                };
                out.push(q);
            }
            pairing.push(out);
        }
        let first_chern_degree = obj
            .get("first_chern_degree")
            .and_then(|x| x.as_i64())
            .ok_or_else(|| Error::Model("missing integer `first_chern_degree`".into()))?;
        let dimension = obj
            .get("dimension")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| Error::Model("missing integer `dimension`".into()))? as u32;
        TargetModel::new(basis, codegrees, pairing, first_chern_degree, dimension)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn codegree(&self, class: u8) -> u32 {
        self.codegrees[class as usize]
    }

    pub fn label(&self, class: u8) -> &str {
        &self.basis[class as usize]
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn pairing(&self) -> &[Vec<Q>] {
        &self.pairing
    }

    /// Inverse pairing matrix `g^{ij}` (the diagonal-class coefficients).
    /// Gauss-Jordan over exact rationals; errors on a singular pairing.
    pub fn pairing_inverse(&self) -> Result<Vec<Vec<Q>>, Error> {
        let m = self.rank();
        let mut a = self.pairing.clone();
        let mut inv: Vec<Vec<Q>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
            .collect();
        for col in 0..m {
            let pivot = (col..m)
                .find(|&r| !a[r][col].is_zero())
                .ok_or_else(|| Error::Model("singular pairing matrix".into()))?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col].clone();
            for j in 0..m {
                a[col][j] = &a[col][j] / &p;
                inv[col][j] = &inv[col][j] / &p;
            }
            for r in 0..m {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for j in 0..m {
                        let s = &a[col][j] * &f;
                        a[r][j] = &a[r][j] - &s;
                        let s = &inv[col][j] * &f;
                        inv[r][j] = &inv[r][j] - &s;
                    }
                }
            }
        }
        Ok(inv)
    }

    /// Complex virtual dimension of the space of degree-`degree` maps from
    /// genus-`genus` curves with `markings` points:
    /// `(1-g)·dim + c1·d + n + 3g - 3`.
    ///
    /// For the plane this is `3d + n + g - 1`.
    pub fn virtual_dimension(&self, genus: u32, markings: u32, degree: u32) -> i64 {
        (1 - genus as i64) * self.dimension as i64
            + self.first_chern_degree * degree as i64
            + markings as i64
            + 3 * genus as i64
            - 3
    }

    /// The correlator rewriting rules in this crate assume exactly the
    /// plane model; everything else is out of contract.
    pub fn supports_plane_reduction(&self) -> bool {
        *self == TargetModel::plane()
    }
}
