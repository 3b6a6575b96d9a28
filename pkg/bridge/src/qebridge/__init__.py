"""qebridge: expose neural quality scorers over a line-delimited JSON
protocol.

The bridge reads {"id", "src", "tgt"} requests on stdin, batches them, and
writes one {"id", "score"} response per request, exiting 0 once stdin closes
and all responses are flushed. Any client speaking the protocol (such as the
pairselect streaming scorer) can drive it; model weights never load in the
client process.
"""

from .config import BridgeConfig
from .models import load_model
from .serve import serve

__version__ = "0.1.0"
