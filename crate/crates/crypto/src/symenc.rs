//! AES-128-CBC with PKCS7 padding and an explicit random IV. Vote codes are
//! stored on the bulletin board under a master key that is secret-shared
//! until the election closes.

use aes::cipher::{block_padding::Pkcs7, BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::codec::Encode;
use crate::CryptoError;

type Enc = cbc::Encryptor<aes::Aes128>;
type Dec = cbc::Decryptor<aes::Aes128>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymCiphertext {
    #[serde(with = "hex::serde")]
    pub iv: [u8; 16],
    #[serde(with = "hex::serde")]
    pub data: Vec<u8>,
}

pub fn encrypt<R: RngCore>(key: u128, plaintext: &[u8], rng: &mut R) -> SymCiphertext {
    let mut iv = [0u8; 16];
    rng.fill_bytes(&mut iv);
    let data = Enc::new(&key.to_be_bytes().into(), &iv.into())
        .encrypt_padded_vec_mut::<Pkcs7>(plaintext);
    SymCiphertext { iv, data }
}

pub fn decrypt(key: u128, ct: &SymCiphertext) -> Result<Vec<u8>, CryptoError> {
    if ct.data.is_empty() || ct.data.len() % 16 != 0 {
        return Err(CryptoError::BadCiphertext);
    }
    Dec::new(&key.to_be_bytes().into(), &ct.iv.into())
        .decrypt_padded_vec_mut::<Pkcs7>(&ct.data)
        .map_err(|_| CryptoError::BadPadding)
}

impl Encode for SymCiphertext {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.iv);
        crate::codec::write_bytes(out, &self.data);
    }
}
