"""Reference Euler integration of the indoor model, written from the model
equations without reference to the C++ code. Regenerates the frozen files

    tests/data/euler_trace.json     500-step traces for two fixed plans
    tests/data/hcho_crossing.json   first step below the formaldehyde threshold
                                    for scenarios/high_formaldehyde.json

Run from the repository root: python3 tests/oracles/sim_oracle.py
"""

import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]

LEVELS = ["off", "low", "medium", "high"]
QUANTITIES = ["temperature_c", "humidity_pct", "co2_ppm", "tvoc_mg_m3", "pm25_ug_m3", "hcho_mg_m3"]


def default_params():
    return json.loads((ROOT / "data" / "config.json").read_text())["sim"]


def level_rate(table, level):
    return 0.0 if level == "off" else table[level]


def switches(clock, plan, anchors, x):
    on = {}
    for aux, level in plan["aux"].items():
        spec = plan["intervals"][aux]
        running = False
        if level != "off":
            if spec == "continuous":
                running = True
            elif spec is not None:
                run, period = spec
                running = math.fmod(clock - anchors[aux], period) < run
        on[aux] = level if running else "off"
    t = plan["thresholds"]
    breach = {
        "air_fresh": x["co2_ppm"] > t["co2_ppm"],
        "air_purification": x["pm25_ug_m3"] > t["pm25_ug_m3"]
        or x["hcho_mg_m3"] > t["formaldehyde_mg_m3"]
        or x["tvoc_mg_m3"] > t["tvoc_mg_m3"],
        "air_humidification": x["humidity_pct"] < t["humidity_lower_pct"],
        "air_sterilization": False,
    }
    for aux, hit in breach.items():
        if hit and on[aux] == "off":
            on[aux] = plan["aux"][aux] if plan["aux"][aux] != "off" else "low"
    return on


def euler_step(x, clock, plan, anchors, outdoor, p, dt):
    on = switches(clock, plan, anchors, x)
    leak = p["leakage"]
    bg = p["outdoor_background"]
    deriv = {
        "temperature_c": leak["temperature_c"] * (outdoor["temperature_c"] - x["temperature_c"]),
        "humidity_pct": leak["humidity_pct"] * (min(max(outdoor["humidity_pct"], 0.0), 100.0) - x["humidity_pct"]),
        "co2_ppm": leak["co2_ppm"] * (bg["co2_ppm"] - x["co2_ppm"]) + p["occupancy_co2_source"],
        "tvoc_mg_m3": leak["tvoc_mg_m3"] * (bg["tvoc_mg_m3"] - x["tvoc_mg_m3"]),
        "pm25_ug_m3": leak["pm25_ug_m3"] * (outdoor["pm25_ug_m3"] - x["pm25_ug_m3"]),
        "hcho_mg_m3": leak["hcho_mg_m3"] * (bg["hcho_mg_m3"] - x["hcho_mg_m3"]) + p["hcho_emission"],
    }
    mode, sp = plan["mode"], plan["setpoint_c"]
    if sp is not None:
        T = x["temperature_c"]
        if (mode == "cool" and T > sp) or (mode == "heat" and T < sp) or mode == "auto":
            deriv["temperature_c"] += p["hvac_rates"][plan["wind_speed"]] * (sp - T)
    t = plan["thresholds"]
    mid = (t["humidity_lower_pct"] + t["humidity_upper_pct"]) / 2.0
    if mode == "dehumidify" and x["humidity_pct"] > mid:
        deriv["humidity_pct"] += p["dehumidify_rate"] * (mid - x["humidity_pct"])
    if on["air_humidification"] != "off" and x["humidity_pct"] < mid:
        deriv["humidity_pct"] += level_rate(p["humidification_rates"], on["air_humidification"]) * (mid - x["humidity_pct"])
    if on["air_fresh"] != "off":
        deriv["co2_ppm"] += level_rate(p["fresh_air_rates"], on["air_fresh"]) * (bg["co2_ppm"] - x["co2_ppm"])
    if on["air_purification"] != "off":
        k = level_rate(p["purification_rates"], on["air_purification"])
        for q in ("pm25_ug_m3", "tvoc_mg_m3", "hcho_mg_m3"):
            deriv[q] -= k * x[q]
    nxt = {q: x[q] + dt * deriv[q] for q in QUANTITIES}
    nxt["humidity_pct"] = min(max(nxt["humidity_pct"], 0.0), 100.0)
    for q in ("co2_ppm", "tvoc_mg_m3", "pm25_ug_m3", "hcho_mg_m3"):
        nxt[q] = max(nxt[q], 0.0)
    return nxt, on


THRESHOLDS = {
    "co2_ppm": 800.0, "pm25_ug_m3": 15.0, "tvoc_mg_m3": 0.6, "formaldehyde_mg_m3": 0.08,
    "humidity_lower_pct": 40.0, "humidity_upper_pct": 60.0,
}

CASES = [
    {
        "name": "cooling_with_duty_cycles",
        "indoor": {"temperature_c": 30.0, "humidity_pct": 70.0, "co2_ppm": 1500.0,
                   "tvoc_mg_m3": 0.9, "pm25_ug_m3": 80.0, "hcho_mg_m3": 0.2},
        "outdoor": {"temperature_c": 33.0, "humidity_pct": 80.0, "pm25_ug_m3": 60.0},
        "plan": {
            "mode": "cool", "setpoint_c": 25.0, "wind_speed": "high",
            "aux": {"air_fresh": "medium", "air_purification": "high",
                    "air_humidification": "off", "air_sterilization": "low"},
            "intervals": {"air_fresh": [30, 120], "air_purification": [20, 60],
                          "air_humidification": None, "air_sterilization": [30, 240]},
            "thresholds": THRESHOLDS,
        },
    },
    {
        "name": "heating_with_override",
        "indoor": {"temperature_c": 15.0, "humidity_pct": 25.0, "co2_ppm": 700.0,
                   "tvoc_mg_m3": 0.1, "pm25_ug_m3": 8.0, "hcho_mg_m3": 0.02},
        "outdoor": {"temperature_c": 2.0, "humidity_pct": 20.0, "pm25_ug_m3": 40.0},
        "plan": {
            "mode": "heat", "setpoint_c": 22.0, "wind_speed": "low",
            "aux": {"air_fresh": "off", "air_purification": "off",
                    "air_humidification": "low", "air_sterilization": "off"},
            "intervals": {"air_fresh": None, "air_purification": None,
                          "air_humidification": [30, 120], "air_sterilization": None},
            "thresholds": THRESHOLDS,
        },
    },
]


def trace(case, p, steps=500):
    x = dict(case["indoor"])
    anchors = {aux: 0.0 for aux in case["plan"]["aux"]}
    dt = p["dt_minutes"]
    rows = []
    clock = 0.0
    for _ in range(steps):
        x, on = euler_step(x, clock, case["plan"], anchors, case["outdoor"], p, dt)
        clock += dt
        rows.append({"clock": clock, "indoor": x, "running": on})
    return rows


def hcho_crossing(p):
    """High-formaldehyde scenario: no respiratory conditions, so the threshold
    is the default 0.08; purification runs at high while above it."""
    sc = json.loads((ROOT / "scenarios" / "high_formaldehyde.json").read_text())
    h = sc["env"]["indoor"]["hcho_mg_m3"]
    threshold = THRESHOLDS["formaldehyde_mg_m3"]
    leak = p["leakage"]["hcho_mg_m3"]
    bg = p["outdoor_background"]["hcho_mg_m3"]
    k = p["purification_rates"]["high"]
    dt = p["dt_minutes"]
    for step in range(1, 10_000):
        h = h + dt * (leak * (bg - h) + p["hcho_emission"] - k * h)
        h = max(h, 0.0)
        if h < threshold:
            return {"step": step, "clock": step * dt, "hcho_mg_m3": h, "threshold": threshold}
    raise RuntimeError("no crossing")


def main():
    p = default_params()
    out = {"params": p, "cases": []}
    for case in CASES:
        out["cases"].append({**case, "trace": trace(case, p)})
    (ROOT / "tests" / "data" / "euler_trace.json").write_text(json.dumps(out, separators=(",", ":")) + "\n")
    crossing = hcho_crossing(p)
    (ROOT / "tests" / "data" / "hcho_crossing.json").write_text(json.dumps(crossing, indent=2) + "\n")
    print(json.dumps(crossing))


if __name__ == "__main__":
    main()
