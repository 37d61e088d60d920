"""Simulator and analysis toolkit for a trusted-third-party quantum bit
commitment protocol: exact qubit/two-qubit linear algebra, the four-phase
protocol state machine with transcripts, dishonest-party strategies, and
numerical verification of the concealment and bindingness claims."""

__version__ = "0.1.0"

from .adversary import (  # noqa: F401
    AliceStrategy,
    BobStrategy,
    TtpStrategy,
    bob_entangled_probe,
    bob_probe_attack,
    delayed_measurement_attack,
    optimal_cheat_unitary,
    random_concealing_quadruple,
    synthesize_attack,
)
from .analysis import (  # noqa: F401
    ConcealmentReport,
    FidelityEstimate,
    concealment_check,
    detection_probability,
    expected_cheat_fidelity_closed,
    expected_cheat_fidelity_mc,
    rho_pair,
)
from .protocol import (  # noqa: F401
    BasisSource,
    ProtocolConfig,
    Transcript,
    commit_honest,
    commit_purified,
    run_protocol,
    unveil_verify,
)
from .qmath import OperatorQuadruple, reference_quadruple, singlet  # noqa: F401
