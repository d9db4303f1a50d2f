use qchannel::channel::{choi_from_kraus, ChoiMatrix};
use qchannel::io::channel_from_json;
use qchannel::sim::circuit_to_kraus;
use qchannel::templates::{Template, TemplateId};

fn golden_choi(text: &str) -> ChoiMatrix {
    choi_from_kraus(&channel_from_json(text).unwrap())
}

#[test]
fn one_to_one_at_zero_matches_golden() {
    let t = Template::new(TemplateId::OneToOne);
    let c = t.instantiate(&vec![0.0; t.param_count]).unwrap();
    let got = choi_from_kraus(&circuit_to_kraus(&c).unwrap());
    let want = golden_choi(include_str!("data/t11_zero.json"));
    assert!(got.distance(&want).unwrap() < 1e-14);
}

#[test]
fn one_to_one_at_fixed_angles_matches_golden() {
    let t = Template::new(TemplateId::OneToOne);
    let params: Vec<f64> = (0..t.param_count).map(|i| 0.1 * (i + 1) as f64).collect();
    let c = t.instantiate(&params).unwrap();
    let got = choi_from_kraus(&circuit_to_kraus(&c).unwrap());
    let want = golden_choi(include_str!("data/t11_ramp.json"));
    assert!(got.distance(&want).unwrap() < 1e-12);
}
