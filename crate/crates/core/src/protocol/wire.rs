//! Length-prefixed JSON frames and the transports carrying them.
//!
//! A frame on a byte stream is a big-endian `u32` length followed by that
//! many bytes of JSON. Requests go verifier to developer; every request gets
//! exactly one response.

use serde::{Deserialize, Serialize};
use std::io::{self, Read, Write};
use std::sync::mpsc::{channel, Receiver, Sender};

use super::{CheckerQuery, EncodeAnswer, EncodeQuery, Inputs, ProtocolError, Verdict};
use crate::commitment::{CommitMessage, RevealMessage};
use crate::he::Ciphertext;

/// Frames larger than this are refused.
pub const MAX_FRAME: usize = 64 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Encode,
    Path,
    Checker,
    Commit,
    Reveal,
    Result,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    #[serde(rename = "type")]
    pub kind: FrameKind,
    pub session: u64,
    pub body: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathBody {
    pub tables: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathAnswer {
    pub input: Option<Inputs>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "lowercase")]
pub enum CheckerBody {
    Query {
        query: CheckerQuery,
        #[serde(with = "crate::bitstr::many")]
        challenges: Vec<Vec<bool>>,
    },
    Proof {
        ct_sk: Vec<Ciphertext>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitBody {
    pub commits: Option<Vec<CommitMessage>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealBody {
    pub reveals: Option<Vec<RevealMessage>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultBody {
    pub verdict: Option<Verdict>,
}

impl Frame {
    pub fn new<T: Serialize>(kind: FrameKind, session: u64, body: &T) -> Frame {
        Frame {
            kind,
            session,
            body: serde_json::to_value(body).expect("serializable"),
        }
    }

    pub fn error(session: u64, msg: impl Into<String>) -> Frame {
        Frame {
            kind: FrameKind::Error,
            session,
            body: serde_json::json!({ "error": msg.into() }),
        }
    }

    pub fn encode(q: &EncodeQuery, session: u64) -> Frame {
        Frame::new(FrameKind::Encode, session, q)
    }

    /// Parses the body, turning an error frame or a kind mismatch into an error.
    pub fn expect<T: for<'de> Deserialize<'de>>(&self, kind: FrameKind) -> Result<T, ProtocolError> {
        if self.kind == FrameKind::Error {
            let msg = self.body["error"].as_str().unwrap_or("unknown error");
            return Err(ProtocolError::Protocol(format!("peer error: {msg}")));
        }
        if self.kind != kind {
            return Err(ProtocolError::Protocol(format!(
                "expected a {kind:?} frame, got {:?}",
                self.kind
            )));
        }
        Ok(serde_json::from_value(self.body.clone())?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("serializable")
    }

    pub fn from_bytes(b: &[u8]) -> Result<Frame, ProtocolError> {
        Ok(serde_json::from_slice(b)?)
    }
}

impl EncodeAnswer {
    pub fn frame(&self, session: u64) -> Frame {
        Frame::new(FrameKind::Encode, session, self)
    }
}

/// Developer side: answers one request frame.
pub trait Service {
    fn handle(&mut self, req: &Frame) -> Frame;
}

/// Verifier side: one request, one response.
pub trait Link {
    fn call(&mut self, req: &Frame) -> Result<Frame, ProtocolError>;
}

/// Calls a service in-process, still round-tripping through the byte form.
pub struct Direct<'a, S: Service + ?Sized>(pub &'a mut S);

impl<S: Service + ?Sized> Link for Direct<'_, S> {
    fn call(&mut self, req: &Frame) -> Result<Frame, ProtocolError> {
        let req = Frame::from_bytes(&req.to_bytes())?;
        Frame::from_bytes(&self.0.handle(&req).to_bytes())
    }
}

/// Moves whole frames.
pub trait Transport {
    fn send(&mut self, frame: &[u8]) -> io::Result<()>;
    /// `None` on a clean end of stream.
    fn recv(&mut self) -> io::Result<Option<Vec<u8>>>;
}

/// Length-prefixed frames over any byte stream (TCP, pipes).
pub struct StreamTransport<T>(pub T);

impl<T: Read + Write> Transport for StreamTransport<T> {
    fn send(&mut self, frame: &[u8]) -> io::Result<()> {
        let len = u32::try_from(frame.len()).map_err(|_| io::Error::other("frame too large"))?;
        self.0.write_all(&len.to_be_bytes())?;
        self.0.write_all(frame)?;
        self.0.flush()
    }

    fn recv(&mut self) -> io::Result<Option<Vec<u8>>> {
        let mut len = [0u8; 4];
        match self.0.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e),
        }
        let len = u32::from_be_bytes(len) as usize;
        if len > MAX_FRAME {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes")));
        }
        let mut buf = vec![0u8; len];
        self.0.read_exact(&mut buf)?;
        Ok(Some(buf))
    }
}

/// In-memory transport between threads.
pub struct QueueTransport {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

pub fn queue_pair() -> (QueueTransport, QueueTransport) {
    let (atx, brx) = channel();
    let (btx, arx) = channel();
    (QueueTransport { tx: atx, rx: arx }, QueueTransport { tx: btx, rx: brx })
}

impl Transport for QueueTransport {
    fn send(&mut self, frame: &[u8]) -> io::Result<()> {
        self.tx
            .send(frame.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer gone"))
    }

    fn recv(&mut self) -> io::Result<Option<Vec<u8>>> {
        Ok(self.rx.recv().ok())
    }
}

/// A link over a transport.
pub struct Client<T: Transport>(pub T);

impl<T: Transport> Link for Client<T> {
    fn call(&mut self, req: &Frame) -> Result<Frame, ProtocolError> {
        self.0.send(&req.to_bytes())?;
        match self.0.recv()? {
            Some(b) => Frame::from_bytes(&b),
            None => Err(ProtocolError::Closed),
        }
    }
}

/// Answers frames until the peer closes; returns the number handled.
pub fn serve<T: Transport>(svc: &mut dyn Service, t: &mut T) -> Result<usize, ProtocolError> {
    let mut n = 0;
    while let Some(b) = t.recv()? {
        let resp = match Frame::from_bytes(&b) {
            Ok(req) => svc.handle(&req),
            Err(e) => Frame::error(0, e.to_string()),
        };
        t.send(&resp.to_bytes())?;
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    impl Service for Echo {
        fn handle(&mut self, req: &Frame) -> Frame {
            Frame::new(FrameKind::Result, req.session, &req.body)
        }
    }

    #[test]
    fn stream_round_trip_and_eof() {
        let f = Frame::new(FrameKind::Path, 3, &PathBody { tables: vec![1, 2] });
        let mut t = StreamTransport(io::Cursor::new(Vec::new()));
        t.send(&f.to_bytes()).unwrap();
        let len = t.0.get_ref().len();
        assert_eq!(&t.0.get_ref()[..4], &(len as u32 - 4).to_be_bytes());
        t.0.set_position(0);
        assert_eq!(Frame::from_bytes(&t.recv().unwrap().unwrap()).unwrap(), f);
        assert!(t.recv().unwrap().is_none());
    }

    #[test]
    fn oversized_frame_refused() {
        let mut b = ((MAX_FRAME + 1) as u32).to_be_bytes().to_vec();
        b.extend([0u8; 8]);
        assert!(StreamTransport(io::Cursor::new(b)).recv().is_err());
    }

    #[test]
    fn queue_serve_loop() {
        let (a, mut b) = queue_pair();
        let h = std::thread::spawn(move || serve(&mut Echo, &mut b).unwrap());
        let mut c = Client(a);
        let r = c.call(&Frame::new(FrameKind::Path, 9, &PathBody { tables: vec![] })).unwrap();
        assert_eq!(r.expect::<PathBody>(FrameKind::Result).unwrap().tables, Vec::<usize>::new());
        drop(c);
        assert_eq!(h.join().unwrap(), 1);
    }
}
