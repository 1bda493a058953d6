//! Canonical byte encoding used for everything that gets signed, hashed or
//! compared across nodes.
//!
//! The rules are fixed: integers are big-endian and fixed-width, variable
//! length byte strings and sequences carry a u32 count prefix, struct fields
//! are concatenated in declaration order, and every top-level message starts
//! with a length-prefixed ASCII domain tag. Two values encode to the same
//! bytes iff they are equal, which is what vote-set comparison and trace
//! digests rely on.

use sha2::{Digest, Sha256};

pub trait Encode {
    fn encode_into(&self, out: &mut Vec<u8>);

    fn encoded(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }
}

impl Encode for u8 {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(*self);
    }
}

impl Encode for u16 {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_be_bytes());
    }
}

impl Encode for u32 {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_be_bytes());
    }
}

impl Encode for u64 {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_be_bytes());
    }
}

impl Encode for u128 {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_be_bytes());
    }
}

impl Encode for bool {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(u8::from(*self));
    }
}

impl Encode for str {
    fn encode_into(&self, out: &mut Vec<u8>) {
        write_bytes(out, self.as_bytes());
    }
}

impl Encode for String {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.as_str().encode_into(out);
    }
}

impl<const N: usize> Encode for [u8; N] {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self);
    }
}

impl<T: Encode> Encode for [T] {
    fn encode_into(&self, out: &mut Vec<u8>) {
        (self.len() as u32).encode_into(out);
        for item in self {
            item.encode_into(out);
        }
    }
}

impl<T: Encode> Encode for Vec<T> {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.as_slice().encode_into(out);
    }
}

impl<T: Encode> Encode for Option<T> {
    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            None => out.push(0),
            Some(v) => {
                out.push(1);
                v.encode_into(out);
            }
        }
    }
}

impl<T: Encode + ?Sized> Encode for &T {
    fn encode_into(&self, out: &mut Vec<u8>) {
        (*self).encode_into(out);
    }
}

impl<A: Encode, B: Encode> Encode for (A, B) {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
        self.1.encode_into(out);
    }
}

impl<A: Encode, B: Encode, C: Encode> Encode for (A, B, C) {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
        self.1.encode_into(out);
        self.2.encode_into(out);
    }
}

pub fn write_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    (bytes.len() as u32).encode_into(out);
    out.extend_from_slice(bytes);
}

/// Builder for a tagged canonical message. The tag separates signing and
/// hashing domains so a signature over one message kind can never be replayed
/// as another.
pub struct Message {
    buf: Vec<u8>,
}

impl Message {
    pub fn new(tag: &str) -> Self {
        let mut buf = Vec::new();
        tag.encode_into(&mut buf);
        Message { buf }
    }

    pub fn push<T: Encode + ?Sized>(mut self, value: &T) -> Self {
        value.encode_into(&mut self.buf);
        self
    }

    pub fn bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn digest(self) -> [u8; 32] {
        digest_bytes(&self.buf)
    }
}

pub fn digest_bytes(bytes: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().into()
}

pub fn digest<T: Encode + ?Sized>(value: &T) -> [u8; 32] {
    digest_bytes(&value.encoded())
}
