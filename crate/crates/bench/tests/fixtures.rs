use splitkit_bench::{methods, GameFixture};

#[test]
fn every_method_builds_a_runnable_fixture() {
    for method in methods() {
        let fixture = GameFixture::new(method, 3, 1);
        let mut iter = fixture.iteration();
        let state = fixture.warm_state(&mut iter, 5);
        assert_eq!(state.k, 5);
        assert!(state.x.is_finite(), "{}", method);
    }
}
