mod common;

#[test]
fn generated_samples_honour_the_contract() {
    let r = common::dataset_contract(11, 1200);
    assert_eq!(r.samples, 1200);
    assert!(r.expansions > 0 && r.oov_words > 0, "contract vacuous: {} expansions, {} OOV", r.expansions, r.oov_words);
    assert!(r.violations.is_empty(), "{:#?}", &r.violations[..r.violations.len().min(10)]);
}
