"""A guided tour of the simulation world.

Builds a mid-size world, prints an ASCII map of obstacles, hazard zones,
patients, drones, and landing zones, then steps the clock past a hazard
refresh to show the zones migrating along inter-patient paths and the exact
battery bookkeeping.
"""

from ceda.config import apply_overrides, default_config
from ceda.world import DOWN, RIGHT, new_world


def ascii_map(world) -> str:
    rows = []
    drones = {d.pos: str(d.id) for d in world.drones}
    zones = {d.landing_zone: "L" for d in world.drones}
    patients = {p.loc: "P" for p in world.pool.active_patients()}
    for y in range(world.grid.height):
        row = []
        for x in range(world.grid.width):
            cell = (x, y)
            if cell in drones:
                row.append(drones[cell])
            elif cell in patients:
                row.append("P")
            elif cell in zones:
                row.append("L")
            elif cell in world.grid.obstacles:
                row.append("#")
            elif cell in world.grid.wind_zones and cell in world.grid.lowsig_zones:
                row.append("%")
            elif cell in world.grid.wind_zones:
                row.append("~")
            elif cell in world.grid.lowsig_zones:
                row.append("-")
            else:
                row.append(".")
        rows.append("".join(row))
    return "\n".join(rows)


cfg = apply_overrides(default_config(), {
    "world.grid": "24x16",
    "world.obstacle_count": "45",
    "hazards.zone_length": "5",
    "hazards.refresh_interval": "10",
    "triage.n_init": "4",
})
world = new_world(cfg, seed=20)

print("Legend: # obstacle | ~ wind | - low-signal | % both | P patient | L zone | 0/1 drones")
print("\n=== clock 0 (initial layout) ===")
print(ascii_map(world))

print("\nPatients on the map:")
for p in world.pool.patients:
    print(f"  patient {p.id} at {p.loc}: level {p.spawn_level}, "
          f"decay a={p.a:.3f} b={p.b:.2f}, timer {p.timer_remaining}")

for _ in range(10):  # one full refresh interval
    world.step((RIGHT, DOWN))

print("\n=== clock 10 (after one hazard refresh) ===")
print(ascii_map(world))

d0 = world.drones[0]
print(f"\nDrone 0 after 10 steps: pos={d0.pos} battery={d0.battery}"
      f" (capacity {cfg.world.battery_capacity}, base drain {cfg.world.drain_base})")
print("Battery is exact: 100 - 10 * 0.1 =", 100 - 10 * 0.1)
