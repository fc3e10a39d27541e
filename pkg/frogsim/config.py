from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Seeds default to a fixed base so a fresh checkout reproduces the shipped fixtures.
    base_seed: int = 20240101
    # Process pool size for replicas and sweep mesh points. 1 runs everything inline.
    threads: int = 1

    # Galton-Watson trees
    extinction_tol: float = 1e-12
    # Bushes are a.s. finite but unbounded. Hitting the cap is an error, never a silent cut,
    # because a truncated bush under-counts the frog mass that erase_bushes moves onto the
    # backbone.
    bush_cap: int = 1_000_000
    depth_horizon: int = 12

    # Random-walk analytics
    phi_zero_window: float = 1e-8
    near_pole_window: float = 1e-6
    series_tol: float = 1e-12
    power_tol: float = 1e-10
    power_max_iter: int = 1_000_000

    # Simulators
    step_cap: int = 200
    # Particle-steps, not particles: a BMC above criticality grows geometrically and the
    # cost of a run is the sum of its population over time.
    particle_cap: int = 10_000_000

    # Transience search
    epsilon: float = 1e-4
    k_max: int = 64
    eta_iterations: int = 60
    gamma_shrink: float = 1e-3
    mesh: float = 0.01
    d_cap: int = 40
    n_cap: int = 50

    model_config = {"env_file": ".env", "env_prefix": "FROGSIM_"}


settings = Settings()
