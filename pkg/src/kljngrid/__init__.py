"""KLJN secure key distribution over a chain power grid with switched filters."""

__version__ = "0.1.0"

from .grid import Loop, Network, loops_overlap, segments
from .scheduler import (Round, Schedule, full_schedule, ke_count_closed_form, min_rounds_oracle,
                        rounds_for_distance, verify_schedule)
from .filters import (Band, FabricState, Mode, box_config, modes_for_round, propagate_band,
                      verify_round_isolation)
from .exchange import (Channel, ChannelRecord, Classification, NoiseParams, classify_slot,
                       estimate_loop_resistance, exchange_key, expected_mean_squares,
                       simulate_slot)
from .adversary import (EveObservation, eve_guess_mixed_ordering, eve_observe,
                        indistinguishability_test)
from .timing import (TimingModel, ke_duration, network_key_distribution_time,
                     validate_bandwidth)
