"""Attenuated V-line transform toolkit for Compton-camera SPECT."""
