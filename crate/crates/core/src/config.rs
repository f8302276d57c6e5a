//! JSON descriptions of spaces and maps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{
    extension_map_future, identity_map, product_extension_map, scaling_map, shear_map,
    translation_map, SpacetimeMap,
};
use crate::region::Region;
use crate::space::{LorentzianSpace, Point, SpaceHandle};
use crate::spaces::{
    restrict, BaseLengthSpace, Interval, MinkowskiSpace, WarpFn, WarpedProductSpace,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceSpec {
    Minkowski {
        #[serde(rename = "N")]
        dim: usize,
    },
    Warped {
        interval: Interval,
        warp: WarpFn,
        base: BaseLengthSpace,
    },
    Restricted {
        parent: Box<SpaceSpec>,
        carrier: Region,
    },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<SpaceHandle> {
        Ok(match self {
            SpaceSpec::Minkowski { dim } => SpaceHandle::Minkowski(MinkowskiSpace::new(*dim)?),
            SpaceSpec::Warped {
                interval,
                warp,
                base,
            } => SpaceHandle::Warped(WarpedProductSpace::new(
                *interval,
                warp.clone(),
                base.clone(),
            )?),
            SpaceSpec::Restricted { parent, carrier } => {
                let parent: Arc<dyn LorentzianSpace> = Arc::new(parent.build()?);
                SpaceHandle::Restricted(restrict(parent, carrier.clone())?)
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    Identity,
    Scaling {
        lambda: f64,
    },
    Translation {
        by: Point,
    },
    Shear {
        k: f64,
    },
    /// `f_{λ,p}` on Minkowski space.
    Extension {
        p: Point,
        lambda: f64,
    },
    /// `g_{λ,p}` on a warped product with `f ≡ 1`.
    ProductExtension {
        p: Point,
        lambda: f64,
    },
}

fn minkowski(space: &SpaceHandle, map: &str) -> Result<MinkowskiSpace> {
    match space {
        SpaceHandle::Minkowski(m) => Ok(*m),
        _ => Err(Error::Unsupported(format!(
            "map {map} needs a Minkowski space"
        ))),
    }
}

impl MapSpec {
    pub fn build(&self, space: &SpaceHandle) -> Result<SpacetimeMap> {
        match self {
            MapSpec::Identity => Ok(identity_map(Arc::new(space.clone()))),
            MapSpec::Scaling { lambda } => scaling_map(&minkowski(space, "scaling")?, *lambda),
            MapSpec::Translation { by } => {
                translation_map(&minkowski(space, "translation")?, by.clone())
            }
            MapSpec::Shear { k } => shear_map(&minkowski(space, "shear")?, *k),
            MapSpec::Extension { p, lambda } => {
                extension_map_future(&minkowski(space, "extension")?, p.clone(), *lambda)
            }
            MapSpec::ProductExtension { p, lambda } => match space {
                SpaceHandle::Warped(w) => product_extension_map(w, p.clone(), *lambda),
                _ => Err(Error::Unsupported(
                    "product extension needs a warped product".into(),
                )),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds_spaces() {
        let s: SpaceSpec = serde_json::from_str(r#"{"kind": "minkowski", "N": 3}"#).unwrap();
        assert_eq!(s.build().unwrap().coord_len(), 3);
        let w: SpaceSpec = serde_json::from_str(
            r#"{"kind": "warped", "interval": {"lo": null, "hi": null},
                "warp": {"kind": "exp", "scale": 1.0, "rate": 0.5},
                "base": {"kind": "euclidean", "dim": 1}}"#,
        )
        .unwrap();
        assert_eq!(w.build().unwrap().coord_len(), 2);
        let r: SpaceSpec = serde_json::from_str(
            r#"{"kind": "restricted", "parent": {"kind": "minkowski", "N": 2},
                "carrier": {"kind": "box", "lo": [0.5, 0.0], "hi": [0.5, 1.0]}}"#,
        )
        .unwrap();
        assert!(matches!(r.build().unwrap(), SpaceHandle::Restricted(_)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(
            serde_json::from_str::<SpaceSpec>(r#"{"kind": "minkowski", "N": 2, "x": 1}"#).is_err()
        );
        assert!(
            serde_json::from_str::<MapSpec>(r#"{"name": "scaling", "lambda": 2, "mu": 1}"#)
                .is_err()
        );
    }

    #[test]
    fn map_needs_matching_space() {
        let w = SpaceSpec::Warped {
            interval: Interval::real_line(),
            warp: WarpFn::constant(1.0),
            base: BaseLengthSpace::Euclidean { dim: 1 },
        }
        .build()
        .unwrap();
        assert!(MapSpec::Scaling { lambda: 2.0 }.build(&w).is_err());
        let m = SpaceHandle::Minkowski(MinkowskiSpace::new(2).unwrap());
        assert_eq!(
            MapSpec::Scaling { lambda: 2.0 }
                .build(&m)
                .unwrap()
                .declared_lambda,
            Some(2.0)
        );
    }
}
