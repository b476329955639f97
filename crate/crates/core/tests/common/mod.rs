#![allow(dead_code)]

use pi3_core::scenario::ScenarioConfig;

pub const HONEST: &str = r#"
master_seed = 5

[protocol]
n_leaders = 3
tau1 = 8
tau2 = 3
d = 6
m = 1
alpha = "1/2"
w = "2"
n_t = 6

[network]
parties = 4
power = [0.25, 0.25, 0.25, 0.25]
block_prob = 0.2
rounds = 500

[[pools]]
x = "1000"
y = "1000"
fee = "3/1000"

[workload]
swap_prob = 0.3
amount = "5"
initial_balance = "500"
"#;

pub const BIASED: &str = r#"
master_seed = 1000

[protocol]
n_leaders = 3
tau1 = 8
tau2 = 3
d = 6
m = 1
alpha = "1/2"
w = "1/50"
n_t = 8

[network]
parties = 4
power = [0.25, 0.25, 0.2, 0.3]
block_prob = 0.3
rounds = 300

[[pools]]
x = "1000"
y = "1000"
fee = "0"

[workload]
swap_prob = 0.3
amount = "50"
initial_balance = "5000"

[adversary]
strategy = "biased"
parties = [3]
k = 2
front_amount = "100"
"#;

pub fn cfg(s: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml(s).expect("valid scenario")
}
