"""GAN-discriminator sensitivity feature selection for network flow records."""

__version__ = "0.1.0"
