"""floqryd: Floquet-frequency-modulated Rydberg atom array simulator.

Simulates driven Rydberg pairs and short chains under sinusoidal detuning
modulation: extended-blockade entanglement, dynamical stabilisation of the
single-excitation symmetric state, modulation-assisted anti-blockade and
adiabatic transfer, with thermal-disorder Monte Carlo, Lindblad dissipation
and readout-error forward models.  The `floqryd` CLI runs bundled scenario
files and exports CSV/JSON artifacts.
"""

__version__ = "0.1.0"
