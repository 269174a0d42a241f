//! The textual (JSON) form of set descriptors and its canonical rendering.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, FreeSet, GridSet, IntSet, Region, SetDescriptor, Stabilizer, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// A toggled point: an integer (halfline, or a grid line), a dihedral element
/// `[shift, ±1]`, or a free-group word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exception {
    Int(i64),
    Element([i64; 2]),
    Word(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSpec {
    Cones {
        cones: Vec<String>,
        #[serde(default)]
        exceptions: Vec<String>,
    },
    Threshold {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axis: Option<Axis>,
        side: Side,
        threshold: i64,
        #[serde(default)]
        exceptions: Vec<Exception>,
    },
}

fn bad(msg: impl Into<String>) -> BackendError {
    BackendError::Descriptor(msg.into())
}

fn ray(side: Side, threshold: i64) -> IntSet {
    match side {
        Side::L => IntSet::at_most(threshold),
        Side::R => IntSet::at_least(threshold),
    }
}

fn int_exceptions(exceptions: &[Exception]) -> Result<IntSet, BackendError> {
    let mut set = IntSet::empty();
    for e in exceptions {
        match e {
            Exception::Int(n) => set = set.symmetric_difference(&IntSet::point(*n)),
            other => return Err(bad(format!("expected an integer exception, found {other:?}"))),
        }
    }
    Ok(set)
}

fn parse_word(s: &str) -> Result<Word, BackendError> {
    match Word::parse(s) {
        Some(w) if w.to_string() == s.trim() => Ok(w),
        _ => Err(bad(format!("'{s}' is not a reduced word over a, b, A, B"))),
    }
}

/// Default stabilizer implied by the shape of a spec.
pub(crate) fn default_stabilizer(spec: &SetSpec) -> Stabilizer {
    match spec {
        SetSpec::Threshold { axis: Some(Axis::Y), .. } => Stabilizer::Cyclic([1, 0]),
        SetSpec::Threshold { axis: Some(Axis::X), .. } => Stabilizer::Cyclic([0, 1]),
        _ => Stabilizer::Trivial,
    }
}

impl SetSpec {
    /// Builds the denoted set. Nontriviality is not checked here.
    pub fn to_descriptor(&self, backend: Backend, stabilizer: Option<Stabilizer>) -> Result<SetDescriptor, BackendError> {
        let stabilizer = stabilizer.unwrap_or_else(|| default_stabilizer(self));
        let region = match (backend, self) {
            (Backend::Halfline, SetSpec::Threshold { axis: None, side, threshold, exceptions }) => {
                Region::Halfline(ray(*side, *threshold).symmetric_difference(&int_exceptions(exceptions)?))
            }
            (Backend::Dihedral, SetSpec::Threshold { axis: None, side, threshold, exceptions }) => {
                let (mut pos, mut neg) = (ray(*side, *threshold), ray(*side, *threshold));
                for e in exceptions {
                    match e {
                        Exception::Element([s, 1]) => pos = pos.symmetric_difference(&IntSet::point(*s)),
                        Exception::Element([s, -1]) => neg = neg.symmetric_difference(&IntSet::point(*s)),
                        other => {
                            return Err(bad(format!("dihedral exceptions are [shift, 1] or [shift, -1], found {other:?}")))
                        }
                    }
                }
                Region::Dihedral { pos, neg }
            }
            (Backend::Grid, SetSpec::Threshold { axis: Some(axis), side, threshold, exceptions }) => {
                let s = ray(*side, *threshold).symmetric_difference(&int_exceptions(exceptions)?);
                Region::Grid(match axis {
                    Axis::X => GridSet::from_x(&s),
                    Axis::Y => GridSet::from_y(&s),
                })
            }
            (Backend::Grid, SetSpec::Threshold { axis: None, .. }) => return Err(bad("grid sets need an axis")),
            (Backend::Free, SetSpec::Cones { cones, exceptions }) => {
                let cones = cones.iter().map(|c| parse_word(c)).collect::<Result<Vec<_>, _>>()?;
                let exceptions = exceptions.iter().map(|c| parse_word(c)).collect::<Result<Vec<_>, _>>()?;
                Region::Free(FreeSet::from_parts(&cones, &exceptions))
            }
            (b, _) => return Err(bad(format!("descriptor shape does not fit the {b} backend"))),
        };
        SetDescriptor::new(region, stabilizer)
    }

    /// Canonical rendering: the fewest exceptions, then the smallest threshold.
    pub fn from_descriptor(d: &SetDescriptor) -> Result<SetSpec, BackendError> {
        match d.region() {
            Region::Halfline(s) => {
                let (side, threshold, exc) = render_rays(&[s])?;
                Ok(SetSpec::Threshold {
                    axis: None,
                    side,
                    threshold,
                    exceptions: exc[0].iter().map(|&n| Exception::Int(n)).collect(),
                })
            }
            Region::Dihedral { pos, neg } => {
                let (side, threshold, exc) = render_rays(&[pos, neg])?;
                let mut exceptions: Vec<[i64; 2]> = exc[0].iter().map(|&n| [n, 1]).collect();
                exceptions.extend(exc[1].iter().map(|&n| [n, -1]));
                exceptions.sort();
                Ok(SetSpec::Threshold {
                    axis: None,
                    side,
                    threshold,
                    exceptions: exceptions.into_iter().map(Exception::Element).collect(),
                })
            }
            Region::Grid(g) => {
                let (axis, s) = match (g.as_y_set(), g.as_x_set()) {
                    (Some(s), _) if d.stabilizer() != Stabilizer::Cyclic([0, 1]) => (Axis::Y, s),
                    (_, Some(s)) => (Axis::X, s),
                    (Some(s), None) => (Axis::Y, s),
                    (None, None) => return Err(bad("grid set depends on both coordinates")),
                };
                let (side, threshold, exc) = render_rays(&[&s])?;
                Ok(SetSpec::Threshold {
                    axis: Some(axis),
                    side,
                    threshold,
                    exceptions: exc[0].iter().map(|&n| Exception::Int(n)).collect(),
                })
            }
            Region::Free(f) => {
                let (cones, exceptions) = f.render();
                Ok(SetSpec::Cones {
                    cones: cones.iter().map(|w| w.to_string()).collect(),
                    exceptions: exceptions.iter().map(|w| w.to_string()).collect(),
                })
            }
        }
    }
}

/// Writes each set as a common ray modified by finitely many points.
fn render_rays(sets: &[&IntSet]) -> Result<(Side, i64, Vec<Vec<i64>>), BackendError> {
    let lower = sets.iter().all(|s| s.neg_tail() && !s.pos_tail());
    let upper = sets.iter().all(|s| !s.neg_tail() && s.pos_tail());
    if !lower && !upper {
        return Err(bad("set is not a half-line up to finitely many points"));
    }
    // For an upper ray work with the complement: S Δ R_{a+1} = S* Δ L_a.
    let work: Vec<IntSet> = sets.iter().map(|s| if lower { (*s).clone() } else { s.complement() }).collect();
    let mut candidates: Vec<i64> = work.iter().flat_map(|s| s.toggles().iter().map(|t| t - 1)).collect();
    candidates.sort_unstable();
    candidates.dedup();
    let cost = |a: i64| -> u64 {
        work.iter().map(|s| s.symmetric_difference(&IntSet::at_most(a)).finite_len().expect("finite")).sum()
    };
    let best = candidates
        .into_iter()
        .map(|a| (cost(a), a))
        .min()
        .expect("a half-line has at least one toggle")
        .1;
    let exc = work
        .iter()
        .map(|s| s.symmetric_difference(&IntSet::at_most(best)).points().expect("finite"))
        .collect();
    if lower {
        Ok((Side::L, best, exc))
    } else {
        Ok((Side::R, best + 1, exc))
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Cones { cones, exceptions } => {
                let body = if cones.is_empty() {
                    "∅".to_string()
                } else {
                    cones.iter().map(|c| format!("cone({c})")).collect::<Vec<_>>().join(" ∪ ")
                };
                write!(f, "{body}")?;
                if !exceptions.is_empty() {
                    write!(f, " Δ {{{}}}", exceptions.join(","))?;
                }
                Ok(())
            }
            SetSpec::Threshold { axis, side, threshold, exceptions } => {
                match axis {
                    None => write!(f, "{side:?}_{threshold}")?,
                    Some(a) => {
                        let v = if *a == Axis::X { "x" } else { "y" };
                        let op = if *side == Side::L { "≤" } else { "≥" };
                        write!(f, "{{{v}{op}{threshold}}}")?
                    }
                }
                if !exceptions.is_empty() {
                    let parts: Vec<String> = exceptions
                        .iter()
                        .map(|e| match e {
                            Exception::Int(n) => n.to_string(),
                            Exception::Element([s, e]) => format!("({s},{e:+})"),
                            Exception::Word(w) => w.clone(),
                        })
                        .collect();
                    write!(f, " Δ {{{}}}", parts.join(","))?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for SetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match SetSpec::from_descriptor(self) {
            Ok(spec) => write!(f, "{spec}"),
            Err(_) => write!(f, "{:?}", self.region()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halfline(json: &str) -> SetDescriptor {
        let spec: SetSpec = serde_json::from_str(json).unwrap();
        spec.to_descriptor(Backend::Halfline, None).unwrap()
    }

    #[test]
    fn renders_fewest_exceptions() {
        let d = halfline(r#"{"side":"L","threshold":0,"exceptions":[2]}"#);
        let spec = SetSpec::from_descriptor(&d).unwrap();
        assert_eq!(spec.to_string(), "L_0 Δ {2}");
        // L_2 minus {1} has the same size-1 description at threshold 0 and 2
        let e = halfline(r#"{"side":"L","threshold":2,"exceptions":[1]}"#);
        assert_eq!(SetSpec::from_descriptor(&e).unwrap().to_string(), "L_0 Δ {2}");
        let r = halfline(r#"{"side":"R","threshold":1,"exceptions":[1,2]}"#);
        assert_eq!(SetSpec::from_descriptor(&r).unwrap().to_string(), "R_3");
    }

    #[test]
    fn json_round_trip_all_backends() {
        let cases = [
            (Backend::Halfline, r#"{"side":"R","threshold":-4,"exceptions":[-9,7]}"#),
            (Backend::Dihedral, r#"{"side":"L","threshold":0,"exceptions":[[3,-1]]}"#),
            (Backend::Grid, r#"{"axis":"y","side":"R","threshold":1,"exceptions":[]}"#),
            (Backend::Free, r#"{"cones":["a","b"],"exceptions":["B"]}"#),
        ];
        for (backend, json) in cases {
            let spec: SetSpec = serde_json::from_str(json).unwrap();
            let d = spec.to_descriptor(backend, None).unwrap();
            let back = SetSpec::from_descriptor(&d).unwrap();
            assert_eq!(back, spec, "{json}");
            assert_eq!(serde_json::to_string(&back).unwrap(), json);
        }
    }

    #[test]
    fn shape_errors() {
        let spec: SetSpec = serde_json::from_str(r#"{"cones":["a"]}"#).unwrap();
        assert!(spec.to_descriptor(Backend::Halfline, None).is_err());
        let spec: SetSpec = serde_json::from_str(r#"{"cones":["aA"]}"#).unwrap();
        assert!(spec.to_descriptor(Backend::Free, None).is_err());
        let spec: SetSpec = serde_json::from_str(r#"{"side":"L","threshold":0}"#).unwrap();
        assert!(spec.to_descriptor(Backend::Grid, None).is_err());
    }
}
