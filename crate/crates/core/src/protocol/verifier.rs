//! The verifier: validates public parameters against a specification, runs
//! sessions over a [`Link`], and emits sealed certificates.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

use super::session::{run_session, Oracle, SessionContext, SessionOutcome, SessionPlan};
use super::wire::{
    CheckerBody, CommitBody, Frame, FrameKind, Link, PathAnswer, PathBody, ResultBody, RevealBody,
};
use super::{
    derive_rng, derive_seed, CheckerExchange, CheckerQuery, EncodeAnswer, EncodeQuery, Inputs, Mode,
    ProtocolError, PublicParams,
};
use crate::audit::{Certificate, GeneralPart};
use crate::he::Ciphertext;
use crate::symcrypto::{se_keygen, SeKey};
use crate::table::{parse_graph, transform, OutputValue, TableGraph, TransformedGraph};
use crate::vga::{CriticalPoint, VgaConfig, DEFAULT_BUDGET};

#[derive(Clone, Debug)]
pub struct VerifierOptions {
    pub mode: Mode,
    /// Drives the test suite, the SE key and the challenges.
    pub seed: u64,
    pub budget: usize,
    pub session: u64,
    pub path_requests: bool,
    pub extra_inputs: Vec<Inputs>,
    pub critical_points: Vec<CriticalPoint>,
}

impl Default for VerifierOptions {
    fn default() -> Self {
        VerifierOptions {
            mode: Mode::Honest,
            seed: 0,
            budget: DEFAULT_BUDGET,
            session: 1,
            path_requests: false,
            extra_inputs: Vec::new(),
            critical_points: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Verifier {
    params: Arc<PublicParams>,
    spec_source: String,
    spec_graph: TableGraph,
    spec: TransformedGraph,
    opts: VerifierOptions,
}

/// Checks that the specification talks about the same inputs and outputs
/// as the published structure.
pub(crate) fn check_spec(params: &PublicParams, spec: &TableGraph) -> Result<(), ProtocolError> {
    let s = &params.structure;
    for i in &spec.inputs {
        if s.input_ty(&i.name) != Some(i.ty) {
            return Err(ProtocolError::Spec(format!("input `{}` missing or of another type", i.name)));
        }
    }
    if spec.inputs.len() != s.inputs.len() {
        return Err(ProtocolError::Spec("input sets differ".into()));
    }
    for o in &spec.outputs {
        if s.output_ty(&o.name) != Some(o.ty) {
            return Err(ProtocolError::Spec(format!("output `{}` missing or of another type", o.name)));
        }
    }
    Ok(())
}

/// SE key, encryption seed and `ct_sk` of a general-mode session.
pub(crate) fn general_keys(params: &PublicParams, seed: u64, session: u64) -> Result<GeneralPart, ProtocolError> {
    let sk = se_keygen(params.se.key_bits, &mut derive_rng("se-key", &[seed, session]))?;
    let ct_seed = derive_seed("ct-sk", &[seed, session]);
    let ct_sk = encrypt_key(params, &sk, ct_seed);
    Ok(GeneralPart {
        sk: sk.0,
        ct_seed,
        ct_sk,
    })
}

pub(crate) fn encrypt_key(params: &PublicParams, sk: &SeKey, ct_seed: u64) -> Vec<Ciphertext> {
    params
        .hpk
        .enc_word(sk.bits(), &mut ChaCha20Rng::seed_from_u64(ct_seed))
}

impl Verifier {
    pub fn new(params: Arc<PublicParams>, spec_source: &str, opts: VerifierOptions) -> Result<Verifier, ProtocolError> {
        params.validate()?;
        let spec_graph = parse_graph(spec_source)?;
        let spec = transform(&spec_graph, params.structure.width)?;
        check_spec(&params, &spec_graph)?;
        Ok(Verifier {
            params,
            spec_source: spec_source.to_string(),
            spec_graph,
            spec,
            opts,
        })
    }

    pub fn params(&self) -> &Arc<PublicParams> {
        &self.params
    }

    pub fn options(&self) -> &VerifierOptions {
        &self.opts
    }

    pub fn spec_graph(&self) -> &TableGraph {
        &self.spec_graph
    }

    pub fn plan(&self) -> SessionPlan {
        SessionPlan {
            mode: self.opts.mode,
            vga: VgaConfig::paths(self.opts.seed, self.opts.budget),
            path_requests: self.opts.path_requests,
            extra_inputs: self.opts.extra_inputs.clone(),
            critical_points: self.opts.critical_points.clone(),
        }
    }

    fn run(
        &self,
        plan: &SessionPlan,
        general: Option<&GeneralPart>,
        oracle: &mut dyn Oracle,
    ) -> Result<SessionOutcome, ProtocolError> {
        let sk = general.map(|g| SeKey(g.sk.clone()));
        let ctx = SessionContext {
            params: &self.params,
            spec_graph: &self.spec_graph,
            spec: &self.spec,
            spec_source: &self.spec_source,
            session: self.opts.session,
            sk: sk.as_ref(),
            ct_sk: general.map(|g| g.ct_sk.as_slice()),
        };
        let mut rng = derive_rng("challenges", &[self.opts.seed, self.opts.session]);
        run_session(&ctx, plan, oracle, &mut rng)
    }

    /// Replays a session against recorded answers.
    pub(crate) fn replay(
        &self,
        plan: &SessionPlan,
        general: Option<&GeneralPart>,
        oracle: &mut dyn Oracle,
    ) -> Result<SessionOutcome, ProtocolError> {
        self.run(plan, general, oracle)
    }

    pub fn spec_source(&self) -> &str {
        &self.spec_source
    }
}

struct LinkOracle<'a> {
    link: &'a mut dyn Link,
    session: u64,
}

impl Oracle for LinkOracle<'_> {
    fn path(&mut self, tables: &[usize]) -> Result<Option<Inputs>, ProtocolError> {
        let req = Frame::new(FrameKind::Path, self.session, &PathBody { tables: tables.to_vec() });
        Ok(self.link.call(&req)?.expect::<PathAnswer>(FrameKind::Path)?.input)
    }

    fn encode(&mut self, q: &EncodeQuery) -> Result<EncodeAnswer, ProtocolError> {
        self.link.call(&Frame::encode(q, self.session))?.expect(FrameKind::Encode)
    }

    fn checker(
        &mut self,
        q: &CheckerQuery,
        challenges: Vec<Vec<bool>>,
        ct_sk: &[Ciphertext],
    ) -> Result<CheckerExchange, ProtocolError> {
        let req = Frame::new(
            FrameKind::Checker,
            self.session,
            &CheckerBody::Query {
                query: q.clone(),
                challenges: challenges.clone(),
            },
        );
        let commits = self.link.call(&req)?.expect::<CommitBody>(FrameKind::Commit)?.commits;
        let reveals = match commits {
            Some(_) => {
                let req = Frame::new(FrameKind::Checker, self.session, &CheckerBody::Proof { ct_sk: ct_sk.to_vec() });
                self.link.call(&req)?.expect::<RevealBody>(FrameKind::Reveal)?.reveals
            }
            None => None,
        };
        Ok(CheckerExchange {
            challenges,
            commits,
            reveals,
        })
    }
}

/// Runs one full session and returns its sealed certificate.
pub fn verify_session(v: &Verifier, link: &mut dyn Link) -> Result<Certificate, ProtocolError> {
    let plan = v.plan();
    let general = match plan.mode {
        Mode::General => Some(general_keys(&v.params, v.opts.seed, v.opts.session)?),
        Mode::Honest => None,
    };
    let session = v.opts.session;
    let outcome = v.run(&plan, general.as_ref(), &mut LinkOracle { link, session })?;
    let done = Frame::new(
        FrameKind::Result,
        session,
        &ResultBody {
            verdict: Some(outcome.verdict.clone()),
        },
    );
    // the developer's acknowledgement carries no information
    let _ = link.call(&done);
    Ok(Certificate::new(v, plan, outcome, general))
}

/// Evaluates one input through the encrypted graph (honest mode, no suite).
pub fn eval_encrypted(
    params: Arc<PublicParams>,
    spec_source: &str,
    x: &Inputs,
    session: u64,
    link: &mut dyn Link,
) -> Result<BTreeMap<String, OutputValue>, ProtocolError> {
    let v = Verifier::new(
        params,
        spec_source,
        VerifierOptions {
            budget: 0,
            session,
            extra_inputs: vec![x.clone()],
            ..Default::default()
        },
    )?;
    let out = v.run(&v.plan(), None, &mut LinkOracle { link, session })?;
    out.results
        .into_iter()
        .next()
        .map(|r| r.outputs)
        .ok_or_else(|| ProtocolError::Spec(out.verdict.evaluation_failures.join("; ")))
}
