use felab::dynamics::TrajectoryState;
use felab::rng::StreamId;
use felab::spectral::{Grid2D, SpectralField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use felab::checkpoint::*;

fn word(bytes: &[u8], offset: usize) -> [u8; 8] {
    bytes[offset..offset + 8].try_into().unwrap()
}

fn state() -> TrajectoryState {
    let g = Grid2D::new(16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = SpectralField::random(&g, &mut rng, 5.0, |_| 1.0);
    TrajectoryState {
        t: 0.37,
        step: 37,
        omega: w,
        stream: StreamId::new(99, 4),
    }
}

#[test]
fn header_layout() {
    let bytes = encode(&state(), 0.5, 0.01);
    assert_eq!(&bytes[..6], b"FESIM1");
    assert_eq!(u64::from_le_bytes(word(&bytes, 8)), 16);
    assert_eq!(f64::from_le_bytes(word(&bytes, 16)), 0.5);
    assert_eq!(u64::from_le_bytes(word(&bytes, 32)), 37);
    assert_eq!(u64::from_le_bytes(word(&bytes, 48)), 4);
    assert_eq!(bytes.len(), HEADER_LEN + 16 * 256);
}

#[test]
fn byte_exact_round_trip() {
    let s = state();
    let bytes = encode(&s, 0.5, 0.01);
    let (h, back) = decode(&bytes, s.omega.grid()).unwrap();
    assert_eq!(h.seed, 99);
    assert_eq!(back.omega, s.omega);
    assert_eq!(encode(&back, h.gamma, h.dt), bytes);
}

#[test]
fn rejects_corruption() {
    let s = state();
    let mut bytes = encode(&s, 0.5, 0.01);
    let g32 = Grid2D::new(32).unwrap();
    assert!(decode(&bytes, &g32).is_err());
    assert!(decode(&bytes[..bytes.len() - 1], s.omega.grid()).is_err());
    bytes[0] = b'X';
    assert!(decode(&bytes, s.omega.grid()).is_err());
}
