//! Thirteen scripted kitchen episodes over six tasks.

use std::collections::BTreeMap;

use super::scene::{executable_actions, Event, SimObject, Timeline, Trait};
use super::{Annotation, FailureCategory, FailureInjection, Scenario};
use crate::log_model::{GoalPredicate, PlannedAction, TaskSpec, Timestamp, Verb};
use crate::relations::RelationName;
use crate::world::Support;

use Trait::*;

pub const AUDIO_LABELS: [&str; 6] = [
    "water runs in sink",
    "something drops",
    "door closes",
    "microwave hums",
    "coffee machine brews",
    "toaster pops",
];

fn ts(s: u32) -> Timestamp {
    Timestamp::from_secs(s)
}

fn task(name: &str, goal_text: &str, goal: Vec<GoalPredicate>, plan: Vec<PlannedAction>, objects: &[SimObject]) -> TaskSpec {
    TaskSpec {
        task_name: name.into(),
        goal_text: goal_text.into(),
        goal,
        plan,
        executable_actions: executable_actions(objects).iter().map(|a| a.template()).collect(),
        audio_label_set: AUDIO_LABELS.iter().map(|s| s.to_string()).collect(),
    }
}

fn step(text: &str, verb: Verb, args: &[&str]) -> PlannedAction {
    PlannedAction::new(text, verb, args)
}

struct Parts {
    name: &'static str,
    task: TaskSpec,
    objects: Vec<SimObject>,
    timeline: Timeline,
    events: Vec<Event>,
    failure: Option<(FailureCategory, u32, Vec<(u32, u32)>, &'static [(&'static str, &'static str)])>,
}

fn build(p: Parts) -> Scenario {
    let (injected_failure, annotation) = match p.failure {
        Some((category, at, ranges, params)) => (
            Some(FailureInjection {
                category,
                at: ts(at),
                params: params
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .collect::<BTreeMap<_, _>>(),
            }),
            Some(Annotation {
                failure_type: category.failure_type(),
                category,
                ranges: ranges.into_iter().map(|(a, b)| (ts(a), ts(b))).collect(),
            }),
        ),
        None => (None, None),
    };
    Scenario {
        name: p.name.into(),
        task: p.task,
        objects: p.objects,
        timeline: p.timeline.segments,
        events: p.events,
        injected_failure,
        annotation,
    }
}

fn burners(x0: f64) -> Vec<SimObject> {
    ["first", "second", "third", "fourth"]
        .iter()
        .enumerate()
        .map(|(i, ord)| {
            SimObject::new(
                &format!("stoveburner-{}", i + 1),
                "stove burner",
                [0.2, 0.2, 0.05],
                [x0 + 0.65 * i as f64, -0.1, 0.85],
            )
            .named(&format!("{ord} stove burner"))
            .state("turned off")
            .with(&[Receptacle, Toggleable])
        })
        .collect()
}

fn counter(id: &str, display: Option<&str>) -> SimObject {
    let c = SimObject::new(id, "countertop", [2.0, 1.0, 0.05], [-1.0, -0.2, 0.85]).with(&[Receptacle]);
    match display {
        Some(d) => c.named(d),
        None => c,
    }
}

// ---------------------------------------------------------------- boil water

const BURNERS_SEEN: [&str; 4] = ["stoveburner-2", "stoveburner-4", "stoveburner-3", "stoveburner-1"];
const AT_SINK: [&str; 3] = ["pot-1", "faucet-1", "sink-1"];

fn boil_objects() -> Vec<SimObject> {
    let mut v = vec![
        SimObject::new("countertop-3", "countertop", [0.8, 1.0, 0.05], [1.0, -0.2, 0.85])
            .named("third countertop")
            .with(&[Receptacle]),
        SimObject::new("potato-1", "potato", [0.1, 0.1, 0.08], [1.3, -0.1, 0.91])
            .on("countertop-3")
            .spot("countertop-3", 1.3, -0.1),
        SimObject::new("pot-1", "pot", [0.16, 0.16, 0.16], [1.04, -0.13, 0.91])
            .state("empty and clean")
            .on("countertop-3")
            .spot("countertop-3", 1.04, -0.13)
            .spot("sink-1", -0.18, -0.13)
            .with(&[Movable]),
        SimObject::new("soapbottle-1", "soap bottle", [0.06, 0.1, 0.16], [-0.38, -0.1, 0.62]),
        SimObject::new("faucet-1", "faucet", [0.08, 0.1, 0.3], [0.62, 1.3, 0.9])
            .state("turned off")
            .with(&[Toggleable]),
        SimObject::new("sink-1", "sink", [0.4, 1.0, 0.3], [-0.2, -0.2, 0.6]).with(&[Container]),
    ];
    v.extend(burners(2.3));
    v
}

fn boil_goal() -> Vec<GoalPredicate> {
    vec![
        GoalPredicate::state("pot-1", "filled with water"),
        GoalPredicate::relation("pot-1", RelationName::OnTopOf, "stoveburner-4"),
        GoalPredicate::state("stoveburner-4", "turned on"),
    ]
}

const BOIL_GOAL_TEXT: &str = "A pot is filled with water, the pot is on top of a stove burner that is turned on";

fn boil_plan(put_text: &str, toggle_text: &str, toggled: &str) -> Vec<PlannedAction> {
    vec![
        step("pick up pot", Verb::PickUp, &["pot-1"]),
        step("put pot in sink", Verb::PutIn, &["pot-1", "sink-1"]),
        step("toggle on faucet", Verb::ToggleOn, &["faucet-1"]),
        step("toggle off faucet", Verb::ToggleOff, &["faucet-1"]),
        step("pick up pot", Verb::PickUp, &["pot-1"]),
        step(put_text, Verb::PutOn, &["pot-1", "stoveburner-4"]),
        step(toggle_text, Verb::ToggleOn, &[toggled]),
    ]
}

/// Fetch the pot, fill it at the sink and pick it up again (00:00 to 00:34).
fn boil_prefix() -> Timeline {
    Timeline::default()
        .go(9, 0, "move to pot", &[])
        .go(12, 0, "move to pot", &["countertop-3", "potato-1"])
        .go(15, 0, "move to pot", &["pot-1"])
        .act(18, 0, &["pot-1"])
        .go(20, 1, "move to sink", &["pot-1", "soapbottle-1", "faucet-1", "sink-1"])
        .go(22, 1, "move to sink", &AT_SINK)
        .act(25, 1, &AT_SINK)
        .act(28, 2, &AT_SINK)
        .act(31, 3, &AT_SINK)
        .act(34, 4, &AT_SINK)
}

fn with_pot(rest: &[&'static str]) -> Vec<&'static str> {
    std::iter::once("pot-1").chain(rest.iter().copied()).collect()
}

fn boil_completed(name: &'static str, put_text: &str, toggle_text: &str, toggled: &str) -> Parts {
    let objects = boil_objects();
    let on_stove = with_pot(&BURNERS_SEEN);
    Parts {
        name,
        task: task("boil water", BOIL_GOAL_TEXT, boil_goal(), boil_plan(put_text, toggle_text, toggled), &objects),
        objects,
        timeline: boil_prefix()
            .go(36, 5, "move to stove burner", &AT_SINK)
            .go(41, 5, "move to stove burner", &["pot-1"])
            .go(43, 5, "move to stove burner", &on_stove)
            .act(46, 5, &on_stove)
            .act(49, 6, &on_stove),
        events: vec![Event::audio(28, 29, "water runs in sink")],
        failure: None,
    }
}

pub fn boil_water_success() -> Scenario {
    build(boil_completed(
        "boil_water_success",
        "put pot on fourth stove burner",
        "toggle on fourth stove burner",
        "stoveburner-4",
    ))
}

pub fn boil_water_wrong_burner() -> Scenario {
    let mut p = boil_completed(
        "boil_water_wrong_burner",
        "put pot on stove burner",
        "toggle on stove burner",
        "stoveburner-2",
    );
    p.failure = Some((
        FailureCategory::WrongPlanTarget,
        49,
        vec![(49, 49)],
        &[("toggled", "stoveburner-2"), ("intended", "stoveburner-4")],
    ));
    build(p)
}

pub fn boil_water_drop() -> Scenario {
    let objects = boil_objects();
    build(Parts {
        name: "boil_water_drop",
        task: task(
            "boil water",
            BOIL_GOAL_TEXT,
            boil_goal(),
            boil_plan("put pot on fourth stove burner", "toggle on fourth stove burner", "stoveburner-4"),
            &objects,
        ),
        objects,
        timeline: boil_prefix()
            .go(38, 5, "move to fourth stove burner", &AT_SINK)
            .go(41, 5, "move to fourth stove burner", &[])
            .go(43, 5, "move to fourth stove burner", &BURNERS_SEEN)
            .act(44, 5, &BURNERS_SEEN),
        events: vec![
            Event::audio(28, 29, "water runs in sink"),
            Event::drop(36, "pot-1", Support::OnTop("countertop-3".into()), [1.52, -0.13], Some("empty and clean")),
            Event::audio(36, 36, "something drops"),
        ],
        failure: Some((FailureCategory::Drop, 36, vec![(36, 44)], &[("object", "pot-1")])),
    })
}

// --------------------------------------------------------------- toast bread

fn toast_objects(bread_present: bool) -> Vec<SimObject> {
    let bread = SimObject::new("bread-1", "bread", [0.12, 0.03, 0.12], [-0.5, 0.1, 0.91])
        .on("countertop-1")
        .spot("countertop-1", -0.5, 0.1)
        .with(&[Movable]);
    vec![
        counter("countertop-1", None),
        if bread_present { bread } else { bread.absent() },
        SimObject::new("toaster-1", "toaster", [0.3, 0.2, 0.2], [0.3, 0.1, 0.9])
            .state("turned off")
            .with(&[Container, Toggleable]),
    ]
}

fn toast_task(objects: &[SimObject], with_toggle: bool) -> TaskSpec {
    let mut plan = vec![
        step("pick up bread", Verb::PickUp, &["bread-1"]),
        step("put bread in toaster", Verb::PutIn, &["bread-1", "toaster-1"]),
    ];
    if with_toggle {
        plan.push(step("toggle on toaster", Verb::ToggleOn, &["toaster-1"]));
    }
    task(
        "toast bread",
        "A bread slice is inside a toaster that is turned on",
        vec![
            GoalPredicate::relation("bread-1", RelationName::Inside, "toaster-1"),
            GoalPredicate::state("toaster-1", "turned on"),
        ],
        plan,
        objects,
    )
}

const TOAST_ALL: [&str; 3] = ["countertop-1", "bread-1", "toaster-1"];
const BREAD_TOASTER: [&str; 2] = ["bread-1", "toaster-1"];

fn toast_timeline() -> Timeline {
    Timeline::default()
        .go(2, 0, "move to bread", &TOAST_ALL)
        .act(5, 0, &["bread-1"])
        .go(8, 1, "move to toaster", &BREAD_TOASTER)
        .act(11, 1, &BREAD_TOASTER)
}

pub fn toast_bread_success() -> Scenario {
    let objects = toast_objects(true);
    build(Parts {
        name: "toast_bread_success",
        task: toast_task(&objects, true),
        objects,
        timeline: toast_timeline().act(14, 2, &BREAD_TOASTER),
        events: vec![],
        failure: None,
    })
}

pub fn toast_bread_no_toggle() -> Scenario {
    let objects = toast_objects(true);
    build(Parts {
        name: "toast_bread_no_toggle",
        task: toast_task(&objects, false),
        objects,
        timeline: toast_timeline(),
        events: vec![],
        failure: Some((FailureCategory::UnmetGoal, 11, vec![(9, 11)], &[("missing_step", "toggle_on (toaster-1)")])),
    })
}

pub fn toast_bread_missing_bread() -> Scenario {
    let objects = toast_objects(false);
    build(Parts {
        name: "toast_bread_missing_bread",
        task: toast_task(&objects, true),
        objects,
        timeline: Timeline::default()
            .go(2, 0, "move to bread", &["countertop-1", "toaster-1"])
            .act(5, 0, &["countertop-1"]),
        events: vec![],
        failure: Some((FailureCategory::MissingObject, 3, vec![(3, 5)], &[("object", "bread-1")])),
    })
}

// ------------------------------------------------------------------- fry egg

fn fry_objects() -> Vec<SimObject> {
    let mut v = vec![
        SimObject::new("fridge-1", "fridge", [0.6, 0.6, 1.2], [-1.6, 0.0, 0.0])
            .state("closed")
            .with(&[Container, Openable]),
        SimObject::new("egg-1", "egg", [0.05, 0.05, 0.05], [-1.3, 0.3, 0.02])
            .state("whole")
            .inside("fridge-1")
            .with(&[Movable, Crackable]),
        SimObject::new("pan-1", "pan", [0.18, 0.18, 0.08], [0.31, -0.09, 0.91])
            .on("stoveburner-1")
            .with(&[Container]),
    ];
    v.extend(burners(0.3));
    v
}

fn fry_task(objects: &[SimObject], toggle_text: &str, toggled: &str) -> TaskSpec {
    task(
        "fry egg",
        "A cracked egg is in a pan, the pan is on top a stove burner that is turned on",
        vec![
            GoalPredicate::state("egg-1", "cracked"),
            GoalPredicate::relation("egg-1", RelationName::Inside, "pan-1"),
            GoalPredicate::relation("pan-1", RelationName::OnTopOf, "stoveburner-1"),
            GoalPredicate::state("stoveburner-1", "turned on"),
        ],
        vec![
            step("open fridge", Verb::Open, &["fridge-1"]),
            step("pick up egg", Verb::PickUp, &["egg-1"]),
            step("close fridge", Verb::Close, &["fridge-1"]),
            step("put egg in pan", Verb::PutIn, &["egg-1", "pan-1"]),
            step("crack egg", Verb::Crack, &["egg-1"]),
            step(toggle_text, Verb::ToggleOn, &[toggled]),
        ],
        objects,
    )
}

const STOVE_VIEW: [&str; 4] = ["stoveburner-1", "pan-1", "stoveburner-2", "fridge-1"];
const FRIDGE_EGG: [&str; 2] = ["fridge-1", "egg-1"];
const PAN_VIEW: [&str; 3] = ["egg-1", "pan-1", "stoveburner-1"];

fn fry_opening() -> Timeline {
    Timeline::default()
        .go(2, 0, "move to fridge", &STOVE_VIEW)
        .work(4, 0, &["fridge-1"])
        .act(5, 0, &FRIDGE_EGG)
}

pub fn fry_egg_wrong_burner() -> Scenario {
    let objects = fry_objects();
    build(Parts {
        name: "fry_egg_wrong_burner",
        task: fry_task(&objects, "toggle on stove burner", "stoveburner-2"),
        objects,
        timeline: fry_opening()
            .act(8, 1, &FRIDGE_EGG)
            .act(11, 2, &FRIDGE_EGG)
            .go(15, 3, "move to pan", &PAN_VIEW)
            .act(18, 3, &PAN_VIEW)
            .act(21, 4, &PAN_VIEW)
            .act(24, 5, &["egg-1", "pan-1", "stoveburner-1", "stoveburner-2"]),
        events: vec![],
        failure: Some((
            FailureCategory::WrongPlanTarget,
            24,
            vec![(24, 24)],
            &[("toggled", "stoveburner-2"), ("intended", "stoveburner-1")],
        )),
    })
}

pub fn fry_egg_fridge_closed() -> Scenario {
    let objects = fry_objects();
    build(Parts {
        name: "fry_egg_fridge_closed",
        task: fry_task(&objects, "toggle on first stove burner", "stoveburner-1"),
        objects,
        timeline: fry_opening().work(6, 1, &FRIDGE_EGG).act(9, 1, &["fridge-1"]),
        events: vec![Event::set_state(7, "fridge-1", "closed"), Event::audio(7, 7, "door closes")],
        failure: Some((FailureCategory::BlockedPrecondition, 7, vec![(7, 9)], &[("container", "fridge-1")])),
    })
}

// --------------------------------------------------------------- heat potato

fn potato_objects() -> Vec<SimObject> {
    vec![
        counter("countertop-2", None),
        SimObject::new("microwave-1", "microwave", [0.5, 0.4, 0.3], [0.3, 0.2, 0.9])
            .state("closed and turned off")
            .with(&[Container, Openable, Toggleable]),
        SimObject::new("plate-1", "plate", [0.2, 0.2, 0.03], [-0.3, 0.0, 0.91])
            .on("countertop-2")
            .spot("countertop-2", -0.3, 0.0)
            .with(&[Movable, Receptacle]),
        SimObject::new("potato-1", "potato", [0.08, 0.08, 0.07], [-0.8, 0.0, 0.91])
            .on("countertop-2")
            .spot("countertop-2", -0.8, 0.0)
            .with(&[Movable]),
    ]
}

fn potato_task(objects: &[SimObject], plan: Vec<PlannedAction>) -> TaskSpec {
    task(
        "heat potato",
        "A potato is on a plate and inside a microwave that is turned on",
        vec![
            GoalPredicate::relation("potato-1", RelationName::OnTopOf, "plate-1"),
            GoalPredicate::relation("plate-1", RelationName::Inside, "microwave-1"),
            GoalPredicate::state("microwave-1", "turned on"),
        ],
        plan,
        objects,
    )
}

const POTATO_ALL: [&str; 4] = ["countertop-2", "potato-1", "plate-1", "microwave-1"];
const POTATO_PLATE: [&str; 2] = ["potato-1", "plate-1"];

fn potato_opening() -> Timeline {
    Timeline::default()
        .go(2, 0, "move to potato", &POTATO_ALL)
        .act(5, 0, &["potato-1"])
        .go(8, 1, "move to plate", &POTATO_PLATE)
        .act(11, 1, &POTATO_PLATE)
}

pub fn heat_potato_drop() -> Scenario {
    let objects = potato_objects();
    let plan = vec![
        step("pick up potato", Verb::PickUp, &["potato-1"]),
        step("put potato on plate", Verb::PutOn, &["potato-1", "plate-1"]),
        step("open microwave", Verb::Open, &["microwave-1"]),
        step("pick up plate", Verb::PickUp, &["plate-1"]),
        step("put plate in microwave", Verb::PutIn, &["plate-1", "microwave-1"]),
        step("close microwave", Verb::Close, &["microwave-1"]),
        step("toggle on microwave", Verb::ToggleOn, &["microwave-1"]),
    ];
    build(Parts {
        name: "heat_potato_drop",
        task: potato_task(&objects, plan),
        objects,
        timeline: potato_opening(),
        events: vec![
            Event::drop(7, "potato-1", Support::OnTop("countertop-2".into()), [-0.45, 0.3], None),
            Event::audio(7, 7, "something drops"),
        ],
        failure: Some((FailureCategory::Drop, 7, vec![(7, 11)], &[("object", "potato-1")])),
    })
}

pub fn heat_potato_wrong_order() -> Scenario {
    let objects = potato_objects();
    let plan = vec![
        step("pick up potato", Verb::PickUp, &["potato-1"]),
        step("put potato on plate", Verb::PutOn, &["potato-1", "plate-1"]),
        step("toggle on microwave", Verb::ToggleOn, &["microwave-1"]),
        step("open microwave", Verb::Open, &["microwave-1"]),
        step("pick up plate", Verb::PickUp, &["plate-1"]),
        step("put plate in microwave", Verb::PutIn, &["plate-1", "microwave-1"]),
        step("close microwave", Verb::Close, &["microwave-1"]),
    ];
    let carried = ["plate-1", "potato-1", "microwave-1"];
    build(Parts {
        name: "heat_potato_wrong_order",
        task: potato_task(&objects, plan),
        objects,
        timeline: potato_opening()
            .go(13, 2, "move to microwave", &carried)
            .act(15, 2, &["microwave-1"])
            .act(18, 3, &["microwave-1"])
            .go(20, 4, "move to plate", &POTATO_PLATE)
            .act(22, 4, &POTATO_PLATE)
            .go(24, 5, "move to microwave", &carried)
            .act(26, 5, &carried)
            .act(29, 6, &["microwave-1"]),
        events: vec![Event::audio(15, 17, "microwave hums")],
        failure: Some((
            FailureCategory::WrongPlanOrder,
            18,
            vec![(15, 18)],
            &[("early_step", "toggle_on (microwave-1)"), ("late_step", "open (microwave-1)")],
        )),
    })
}

// -------------------------------------------------------------- serve coffee

pub fn serve_coffee_cup_blocking() -> Scenario {
    let objects = vec![
        counter("countertop-1", None),
        SimObject::new("coffeemachine-1", "coffee machine", [0.3, 0.3, 0.4], [0.3, 0.2, 0.9])
            .state("turned off")
            .with(&[Container, Toggleable]),
        SimObject::new("mug-1", "mug", [0.09, 0.09, 0.1], [-0.6, 0.0, 0.91])
            .state("empty and clean")
            .on("countertop-1")
            .spot("countertop-1", -0.6, 0.0)
            .with(&[Movable]),
        SimObject::new("cup-1", "cup", [0.08, 0.08, 0.09], [0.41, 0.31, 0.92])
            .state("empty and clean")
            .inside("coffeemachine-1")
            .spot("countertop-1", -0.3, 0.3)
            .with(&[Movable]),
    ];
    let plan = vec![
        step("pick up mug", Verb::PickUp, &["mug-1"]),
        step("put mug in coffee machine", Verb::PutIn, &["mug-1", "coffeemachine-1"]),
        step("toggle on coffee machine", Verb::ToggleOn, &["coffeemachine-1"]),
        step("toggle off coffee machine", Verb::ToggleOff, &["coffeemachine-1"]),
        step("pick up mug", Verb::PickUp, &["mug-1"]),
        step("put mug on countertop", Verb::PutOn, &["mug-1", "countertop-1"]),
    ];
    let task = task(
        "serve coffee",
        "A clean mug is filled with coffee and on top of the countertop",
        vec![
            GoalPredicate::state("mug-1", "filled with coffee"),
            GoalPredicate::relation("mug-1", RelationName::OnTopOf, "countertop-1"),
        ],
        plan,
        &objects,
    );
    let at_machine = ["mug-1", "coffeemachine-1", "cup-1"];
    build(Parts {
        name: "serve_coffee_cup_blocking",
        task,
        objects,
        timeline: Timeline::default()
            .go(2, 0, "move to mug", &["countertop-1", "mug-1", "coffeemachine-1", "cup-1"])
            .act(5, 0, &["mug-1"])
            .go(8, 1, "move to coffee machine", &at_machine)
            .act(11, 1, &at_machine),
        events: vec![],
        failure: Some((FailureCategory::BlockedPrecondition, 11, vec![(9, 11)], &[("occupant", "cup-1")])),
    })
}

// ----------------------------------------------------------------- store egg

fn store_objects() -> Vec<SimObject> {
    vec![
        counter("countertop-1", None),
        SimObject::new("egg-1", "egg", [0.05, 0.05, 0.05], [-0.7, 0.0, 0.91])
            .on("countertop-1")
            .spot("countertop-1", -0.7, 0.0)
            .with(&[Movable]),
        SimObject::new("bowl-1", "bowl", [0.15, 0.15, 0.07], [-0.2, 0.0, 0.91])
            .on("countertop-1")
            .spot("countertop-1", -0.2, 0.0)
            .with(&[Movable, Container]),
        SimObject::new("fridge-1", "fridge", [0.6, 0.6, 1.2], [1.3, 0.0, 0.0])
            .state("closed")
            .with(&[Container, Openable]),
    ]
}

fn store_task(objects: &[SimObject]) -> TaskSpec {
    task(
        "store egg",
        "A bowl with an egg is stored inside the fridge",
        vec![
            GoalPredicate::relation("egg-1", RelationName::Inside, "bowl-1"),
            GoalPredicate::relation("bowl-1", RelationName::Inside, "fridge-1"),
        ],
        vec![
            step("pick up egg", Verb::PickUp, &["egg-1"]),
            step("put egg in bowl", Verb::PutIn, &["egg-1", "bowl-1"]),
            step("open fridge", Verb::Open, &["fridge-1"]),
            step("pick up bowl", Verb::PickUp, &["bowl-1"]),
            step("put bowl in fridge", Verb::PutIn, &["bowl-1", "fridge-1"]),
            step("close fridge", Verb::Close, &["fridge-1"]),
        ],
        objects,
    )
}

const EGG_BOWL: [&str; 2] = ["egg-1", "bowl-1"];

fn store_opening() -> Timeline {
    Timeline::default()
        .go(2, 0, "move to egg", &["countertop-1", "egg-1", "bowl-1", "fridge-1"])
        .act(5, 0, &["egg-1"])
        .go(8, 1, "move to bowl", &EGG_BOWL)
        .act(11, 1, &EGG_BOWL)
}

pub fn store_egg_success() -> Scenario {
    let objects = store_objects();
    let all = ["bowl-1", "egg-1", "fridge-1"];
    build(Parts {
        name: "store_egg_success",
        task: store_task(&objects),
        objects,
        timeline: store_opening()
            .go(14, 2, "move to fridge", &["fridge-1"])
            .act(17, 2, &["fridge-1"])
            .go(19, 3, "move to bowl", &EGG_BOWL)
            .act(21, 3, &EGG_BOWL)
            .go(23, 4, "move to fridge", &all)
            .act(26, 4, &all)
            .act(29, 5, &["fridge-1"]),
        events: vec![],
        failure: None,
    })
}

pub fn store_egg_drop() -> Scenario {
    let objects = store_objects();
    build(Parts {
        name: "store_egg_drop",
        task: store_task(&objects),
        objects,
        timeline: store_opening(),
        events: vec![
            Event::drop(7, "egg-1", Support::OnTop("countertop-1".into()), [-0.45, 0.3], None),
            Event::audio(7, 7, "something drops"),
        ],
        failure: Some((FailureCategory::Drop, 7, vec![(7, 11)], &[("object", "egg-1")])),
    })
}

/// Every scenario, execution failures first, then planning failures, then successes.
pub fn all() -> Vec<Scenario> {
    vec![
        boil_water_drop(),
        toast_bread_missing_bread(),
        fry_egg_fridge_closed(),
        heat_potato_drop(),
        serve_coffee_cup_blocking(),
        store_egg_drop(),
        boil_water_wrong_burner(),
        toast_bread_no_toggle(),
        fry_egg_wrong_burner(),
        heat_potato_wrong_order(),
        boil_water_success(),
        store_egg_success(),
        toast_bread_success(),
    ]
}

pub fn by_name(name: &str) -> Option<Scenario> {
    all().into_iter().find(|s| s.name == name)
}
