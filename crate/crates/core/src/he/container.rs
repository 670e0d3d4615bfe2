//! Binary container for keys and ciphertext blobs:
//! `"TVHE" | version u8 | backend u8 | kind u8 | count u32 | (len u32, bytes)*`.

use super::{integer, transparent, BackendKind, Ciphertext, HeError, PublicKey, SecretKey};
use super::integer::IntegerParams;

pub const CONTAINER_VERSION: u8 = 1;
const MAGIC: &[u8; 4] = b"TVHE";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContainerKind {
    PublicKey = 1,
    SecretKey = 2,
    Ciphertexts = 3,
}

fn write(backend: BackendKind, kind: ContainerKind, fields: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(11 + fields.iter().map(|f| f.len() + 4).sum::<usize>());
    out.extend_from_slice(MAGIC);
    out.push(CONTAINER_VERSION);
    out.push(backend.tag());
    out.push(kind as u8);
    out.extend_from_slice(&(fields.len() as u32).to_be_bytes());
    for f in fields {
        out.extend_from_slice(&(f.len() as u32).to_be_bytes());
        out.extend_from_slice(f);
    }
    out
}

fn read(b: &[u8], want: ContainerKind) -> Result<(BackendKind, Vec<&[u8]>), HeError> {
    let err = |m: &str| HeError::Container(m.to_string());
    if b.len() < 11 || &b[..4] != MAGIC {
        return Err(err("bad magic"));
    }
    if b[4] != CONTAINER_VERSION {
        return Err(HeError::Container(format!("unsupported version {}", b[4])));
    }
    let backend = BackendKind::from_tag(b[5]).ok_or_else(|| err("unknown backend tag"))?;
    if b[6] != want as u8 {
        return Err(HeError::Container(format!("expected {want:?}, found kind {}", b[6])));
    }
    let count = u32::from_be_bytes(b[7..11].try_into().unwrap()) as usize;
    let mut rest = &b[11..];
    let mut fields = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        if rest.len() < 4 {
            return Err(err("truncated field header"));
        }
        let len = u32::from_be_bytes(rest[..4].try_into().unwrap()) as usize;
        rest = &rest[4..];
        if rest.len() < len {
            return Err(err("truncated field"));
        }
        fields.push(&rest[..len]);
        rest = &rest[len..];
    }
    if !rest.is_empty() {
        return Err(err("trailing bytes"));
    }
    Ok((backend, fields))
}

fn params_bytes(p: &IntegerParams) -> Vec<u8> {
    [p.eta, p.rho, p.tau, p.gamma].iter().flat_map(|v| v.to_be_bytes()).collect()
}

fn params_from(b: &[u8]) -> Result<IntegerParams, HeError> {
    if b.len() != 16 {
        return Err(HeError::Container("parameter block".into()));
    }
    let v = |i: usize| u32::from_be_bytes(b[4 * i..4 * i + 4].try_into().unwrap());
    Ok(IntegerParams {
        eta: v(0),
        rho: v(1),
        tau: v(2),
        gamma: v(3),
    })
}

fn transparent_fields(fields: &[&[u8]]) -> Result<(u32, [u8; 32]), HeError> {
    match fields {
        [k, id] if k.len() == 4 && id.len() == 32 => {
            Ok((u32::from_be_bytes((*k).try_into().unwrap()), (*id).try_into().unwrap()))
        }
        _ => Err(HeError::Container("transparent key fields".into())),
    }
}

pub(super) fn write_public(pk: &PublicKey) -> Vec<u8> {
    match pk {
        PublicKey::Transparent(k) => write(
            BackendKind::Transparent,
            ContainerKind::PublicKey,
            &[&k.k.to_be_bytes(), &k.id],
        ),
        PublicKey::Integer(k) => {
            let mut owned = vec![params_bytes(&k.params), integer::biguint_bytes(&k.x0)];
            owned.extend(k.xs.iter().map(integer::biguint_bytes));
            let refs: Vec<&[u8]> = owned.iter().map(Vec::as_slice).collect();
            write(BackendKind::IntegerShe, ContainerKind::PublicKey, &refs)
        }
    }
}

pub(super) fn read_public(b: &[u8]) -> Result<PublicKey, HeError> {
    let (backend, fields) = read(b, ContainerKind::PublicKey)?;
    match backend {
        BackendKind::Transparent => {
            let (k, id) = transparent_fields(&fields)?;
            Ok(PublicKey::Transparent(transparent::PublicKey { k, id }))
        }
        BackendKind::IntegerShe => {
            if fields.len() < 3 {
                return Err(HeError::Container("integer public key fields".into()));
            }
            let params = params_from(fields[0])?;
            if fields.len() != 2 + params.tau as usize {
                return Err(HeError::Container("integer public key count".into()));
            }
            Ok(PublicKey::Integer(integer::PublicKey {
                params,
                x0: integer::biguint_from(fields[1]),
                xs: fields[2..].iter().map(|f| integer::biguint_from(f)).collect(),
            }))
        }
    }
}

pub(super) fn write_secret(sk: &SecretKey) -> Vec<u8> {
    match sk {
        SecretKey::Transparent(k) => write(
            BackendKind::Transparent,
            ContainerKind::SecretKey,
            &[&k.k.to_be_bytes(), &k.id],
        ),
        SecretKey::Integer(k) => write(
            BackendKind::IntegerShe,
            ContainerKind::SecretKey,
            &[&params_bytes(&k.params), &integer::biguint_bytes(&k.p)],
        ),
    }
}

pub(super) fn read_secret(b: &[u8]) -> Result<SecretKey, HeError> {
    let (backend, fields) = read(b, ContainerKind::SecretKey)?;
    match backend {
        BackendKind::Transparent => {
            let (k, id) = transparent_fields(&fields)?;
            Ok(SecretKey::Transparent(transparent::SecretKey { k, id }))
        }
        BackendKind::IntegerShe => match fields.as_slice() {
            [params, p] => Ok(SecretKey::Integer(integer::SecretKey {
                params: params_from(params)?,
                p: integer::biguint_from(p),
            })),
            _ => Err(HeError::Container("integer secret key fields".into())),
        },
    }
}

/// Serializes a ciphertext vector for storage.
pub fn write_ciphertexts(backend: BackendKind, cts: &[Ciphertext]) -> Vec<u8> {
    let refs: Vec<&[u8]> = cts.iter().map(|c| c.0.as_slice()).collect();
    write(backend, ContainerKind::Ciphertexts, &refs)
}

pub fn read_ciphertexts(b: &[u8]) -> Result<(BackendKind, Vec<Ciphertext>), HeError> {
    let (backend, fields) = read(b, ContainerKind::Ciphertexts)?;
    Ok((backend, fields.into_iter().map(|f| Ciphertext(f.to_vec())).collect()))
}
