//! Scripted dishonest developers used to exercise the verifier.

use super::wire::{Frame, FrameKind, Service};
use super::{Developer, EncodeAnswer, EncodeQuery, QueryKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Flips the low bit of every payload answer.
    FlipPayload,
    /// Turns every ⊤ answer into ⊥ and every ⊥ into ⊤.
    FlipTag,
    /// Answers each q2 query with the honest answer to the previous q2 query.
    SwapAnswers,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flip-payload" => Ok(Strategy::FlipPayload),
            "flip-tag" => Ok(Strategy::FlipTag),
            "swap-answers" => Ok(Strategy::SwapAnswers),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

/// Wraps an honest developer and rewrites its q2 answers. Checker rounds
/// are left to the honest inner developer.
#[derive(Clone, Debug)]
pub struct MaliciousDeveloper {
    pub inner: Developer,
    pub strategy: Strategy,
    previous: Option<EncodeAnswer>,
    /// Number of answers that differ from the honest ones.
    pub deviations: usize,
}

impl MaliciousDeveloper {
    pub fn new(inner: Developer, strategy: Strategy) -> MaliciousDeveloper {
        MaliciousDeveloper {
            inner,
            strategy,
            previous: None,
            deviations: 0,
        }
    }

    fn rewrite(&mut self, honest: EncodeAnswer) -> EncodeAnswer {
        match self.strategy {
            Strategy::FlipPayload => match honest {
                EncodeAnswer::Payload(mut b) => {
                    if let Some(last) = b.last_mut() {
                        *last = !*last;
                    }
                    EncodeAnswer::Payload(b)
                }
                a => a,
            },
            Strategy::FlipTag => match honest {
                EncodeAnswer::Top => EncodeAnswer::Bottom,
                EncodeAnswer::Bottom => EncodeAnswer::Top,
                a => a,
            },
            Strategy::SwapAnswers => self.previous.replace(honest.clone()).unwrap_or(honest),
        }
    }
}

impl Service for MaliciousDeveloper {
    fn handle(&mut self, req: &Frame) -> Frame {
        if self.inner.session() != Some(req.session) {
            self.previous = None;
        }
        let resp = self.inner.handle(req);
        if req.kind != FrameKind::Encode || resp.kind != FrameKind::Encode {
            return resp;
        }
        let Ok(q) = req.expect::<EncodeQuery>(FrameKind::Encode) else {
            return resp;
        };
        if !matches!(q.kind, QueryKind::Q2 { .. }) {
            return resp;
        }
        let Ok(honest) = resp.expect::<EncodeAnswer>(FrameKind::Encode) else {
            return resp;
        };
        let forged = self.rewrite(honest.clone());
        if forged != honest {
            self.deviations += 1;
        }
        forged.frame(req.session)
    }
}
