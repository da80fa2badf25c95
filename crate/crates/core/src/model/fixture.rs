//! Built-in reference models used by tests, documentation, and the synthetic
//! data generator.

use crate::model::{BinOp, EquationTree, ModelGenotype, StateSchema};

fn op(op: BinOp, left: EquationTree, right: EquationTree) -> EquationTree {
    EquationTree::Op { op, left: Box::new(left), right: Box::new(right) }
}

fn add(l: EquationTree, r: EquationTree) -> EquationTree {
    op(BinOp::Add, l, r)
}

fn sub(l: EquationTree, r: EquationTree) -> EquationTree {
    op(BinOp::Sub, l, r)
}

fn mul(l: EquationTree, r: EquationTree) -> EquationTree {
    op(BinOp::Mul, l, r)
}

/// Schema for the seven-state mood fixture: daily self-report variables on a
/// 1 to 10 scale, with mood and sleep as forecasting targets.
pub fn mood_fixture_schema() -> StateSchema {
    StateSchema::new(
        vec![
            "mood".into(),
            "worrying".into(),
            "self_esteem".into(),
            "sleep".into(),
            "activities".into(),
            "enjoyed".into(),
            "social".into(),
        ],
        vec![0, 3],
        vec![(1.0, 10.0); 7],
    )
    .expect("fixture schema is valid")
}

/// A seven-equation system over the mood schema with a single shared
/// parameter; used as ground truth in recovery experiments.
///
/// ```text
/// mood(t+1)        = mood + g1*(sleep*(g1 - mood))
/// worrying(t+1)    = ((enjoyed - social)*(enjoyed - self_esteem))
///                    * ((enjoyed - social)*social)
/// self_esteem(t+1) = mood
/// sleep(t+1)       = sleep
/// activities(t+1)  = social
/// enjoyed(t+1)     = self_esteem
/// social(t+1)      = ((worrying - (g1 - social))*(worrying*sleep))
///                    + (((worrying - (g1 - social))*(sleep*sleep)) + g1)
/// ```
pub fn mood_fixture_genotype() -> ModelGenotype {
    const MOOD: usize = 0;
    const WORRYING: usize = 1;
    const SELF_ESTEEM: usize = 2;
    const SLEEP: usize = 3;
    const ENJOYED: usize = 5;
    const SOCIAL: usize = 6;
    let s = EquationTree::State;
    let g1 = || EquationTree::Param(0);

    let mood = add(s(MOOD), mul(g1(), mul(s(SLEEP), sub(g1(), s(MOOD)))));
    let worrying = mul(
        mul(sub(s(ENJOYED), s(SOCIAL)), sub(s(ENJOYED), s(SELF_ESTEEM))),
        mul(sub(s(ENJOYED), s(SOCIAL)), s(SOCIAL)),
    );
    let self_esteem = s(MOOD);
    let sleep = s(SLEEP);
    let activities = s(SOCIAL);
    let enjoyed = s(SELF_ESTEEM);
    let social = add(
        mul(sub(s(WORRYING), sub(g1(), s(SOCIAL))), mul(s(WORRYING), s(SLEEP))),
        add(mul(sub(s(WORRYING), sub(g1(), s(SOCIAL))), mul(s(SLEEP), s(SLEEP))), g1()),
    );

    ModelGenotype::new(
        vec![mood, worrying, self_esteem, sleep, activities, enjoyed, social],
        7,
        &mood_fixture_schema(),
    )
    .expect("fixture genotype is valid")
}

/// Two-state schema for the coupled-pair generator; both states are targets.
pub fn coupled_pair_schema() -> StateSchema {
    StateSchema::new(
        vec!["s1".into(), "s2".into()],
        vec![0, 1],
        vec![(0.0, 1.0), (0.0, 1.0)],
    )
    .expect("coupled-pair schema is valid")
}

/// Minimal relaxation system: `s1` moves toward `s2` at rate `g1`, `s2`
/// persists.
///
/// ```text
/// s1(t+1) = (s1(t) + (g1 * (s2(t) - s1(t))))
/// s2(t+1) = s2(t)
/// ```
pub fn coupled_pair_genotype() -> ModelGenotype {
    let s1 = add(
        EquationTree::State(0),
        mul(EquationTree::Param(0), sub(EquationTree::State(1), EquationTree::State(0))),
    );
    let s2 = EquationTree::State(1);
    ModelGenotype::new(vec![s1, s2], 7, &coupled_pair_schema())
        .expect("coupled-pair genotype is valid")
}
