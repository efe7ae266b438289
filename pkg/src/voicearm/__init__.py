"""Voice-command pipeline for a simulated robot arm.

Natural-language commands are turned into programs in a restricted
command-script language by a completion endpoint, extended with reusable
taught policies, and executed in a sandbox against a simulated arm.
"""

__version__ = "0.1.0"
