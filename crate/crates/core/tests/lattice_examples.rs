use cancellative::lattice::{config_statistics, interface_map, make_config, Init, LatticeShape, Site, SpinConfig};

fn ring(n: usize) -> LatticeShape {
    LatticeShape::ring(n).unwrap()
}

#[test]
fn explicit_pattern_and_all_one() {
    let x = make_config(&ring(5), &Init::Pattern("00110".into())).unwrap();
    assert_eq!(x.occupied(), vec![Site::d1(2), Site::d1(3)]);
    let y = make_config(&LatticeShape::torus(vec![4, 4]).unwrap(), &Init::AllOne).unwrap();
    assert_eq!(y.ones(), 16);
}

#[test]
fn product_half_density() {
    let x = make_config(&ring(10_000), &Init::Product { p: 0.5, seed: 7 }).unwrap();
    let d = x.ones() as f64 / 1e4;
    assert!((d - 0.5).abs() <= 0.02, "{d}");
    assert_eq!(x, make_config(&ring(10_000), &Init::Product { p: 0.5, seed: 7 }).unwrap());
}

#[test]
fn statistics_by_hand() {
    let x = SpinConfig::from_bits(&ring(5), "00110").unwrap();
    let y = SpinConfig::from_bits(&ring(5), "01010").unwrap();
    let s = config_statistics(&x, Some(&y)).unwrap();
    assert_eq!((s.ones, s.gradient, s.parity), (2, 4, Some(1)));
    let z = SpinConfig::zeros(&ring(5));
    let s = config_statistics(&z, Some(&y)).unwrap();
    assert_eq!((s.ones, s.gradient, s.parity), (0, 0, Some(0)));
}

#[test]
fn interface_examples() {
    let x = SpinConfig::from_bits(&ring(5), "00110").unwrap();
    assert_eq!(interface_map(&x).unwrap().to_bit_string().unwrap(), "01010");
    let one = make_config(&ring(7), &Init::AllOne).unwrap();
    assert!(interface_map(&one).unwrap().is_zero());
    for k in 0..512u64 {
        let x = SpinConfig::from_state_index(&ring(9), k).unwrap();
        assert_eq!(interface_map(&x).unwrap().ones() % 2, 0);
    }
}
