// placeholder until io modules land
