use std::sync::Arc;

use cosparse::instances::ProblemInstance;
use cosparse::operators;

#[test]
fn saved_instances_load_back_unchanged() {
    let ops = [
        operators::make_random_parseval_frame(30, 20, 4).unwrap(),
        operators::make_fd_1d(20).unwrap(),
        operators::make_fd_2d(4, 5).unwrap(),
    ];
    for (i, op) in ops.into_iter().enumerate() {
        let dir = tempfile::tempdir().unwrap();
        let inst = ProblemInstance::generate(Arc::new(op), 12, 17, 0.05, 40 + i as u64).unwrap();
        inst.save(dir.path()).unwrap();
        let back = ProblemInstance::load(dir.path()).unwrap();
        assert_eq!(back.x, inst.x);
        assert_eq!(back.y, inst.y);
        assert_eq!(back.beta_star, inst.beta_star);
        assert_eq!(back.op.matrix(), inst.op.matrix());
        assert_eq!(back.op.kind(), inst.op.kind());
        assert_eq!((back.sigma, back.l_target, back.seed), (inst.sigma, inst.l_target, inst.seed));
        assert_eq!(back.profile, inst.profile);
    }
}

#[test]
fn inconsistent_files_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let inst = ProblemInstance::generate(Arc::new(operators::make_fd_1d(10).unwrap()), 6, 8, 0.0, 1).unwrap();
    inst.save(dir.path()).unwrap();
    std::fs::write(dir.path().join("y.csv"), "1\n2\n").unwrap();
    assert!(ProblemInstance::load(dir.path()).is_err());
}
