# config/settings.py - Configuración del motor leída del entorno

import os
from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Configuración general de tsbayes"""

    def __init__(self):
        # Paralelismo entre cadenas (1 = secuencial)
        self.THREADS = max(1, int(os.getenv("TSBAYES_THREADS", "1")))
        self.LOG_LEVEL = os.getenv("TSBAYES_LOG_LEVEL", "INFO").upper()

        # Semillas por defecto
        self.DEFAULT_SEED = int(os.getenv("TSBAYES_DEFAULT_SEED", "1234"))
        self.BRIDGE_SEED = int(os.getenv("TSBAYES_BRIDGE_SEED", "20200501"))

        # Plantillas de los bloques impresos
        base_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        self.TEMPLATES_DIR = os.getenv("TSBAYES_TEMPLATES_DIR", os.path.join(base_dir, "templates"))

        # Formato de los floats en los CSV (ida y vuelta exacta)
        self.FLOAT_FORMAT = os.getenv("TSBAYES_FLOAT_FORMAT", "%.17g")


# Instancia global de configuración
settings = Settings()
